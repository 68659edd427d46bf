#include <cmath>
#include <map>

#include "doctest.h"
#include "laplab/error.hpp"
#include "laplab/model.hpp"
#include "support.hpp"

using namespace laplab;
using namespace laplab::testing;

namespace {

// Oracle: sum energies clique by clique straight from the parameter vector.
double oracle_log_unnormalized(const ModelStructure& s, std::span<const double> theta, std::span<const int> x) {
  const auto& layout = s.layout();
  double e = 0;
  for (std::size_t c = 0; c < layout.num_cliques(); ++c) {
    const auto& q = layout.clique(c);
    bool active = true;
    long idx = 0;
    for (std::size_t k = 0; k < q.size(); ++k) {
      const int xv = x[q[k]];
      active = active && xv > 0;
      idx = idx * (layout.scope_cards(c)[k] - 1) + (xv - 1);
    }
    if (active) e += theta[layout.offset(c) + static_cast<std::size_t>(idx)];
  }
  return -e;
}

std::vector<int> decode_all(std::uint64_t s, const Cardinalities& cards) {
  std::vector<int> x(cards.size());
  for (std::size_t k = cards.size(); k-- > 0;) {
    x[k] = static_cast<int>(s % cards[k]);
    s /= cards[k];
  }
  return x;
}

}  // namespace

TEST_CASE("log unnormalized density") {
  Rng rng(1);
  const auto s = pairwise_structure(grid_graph(3, 3));
  const MrfModel m(s, uniform_params(s.dimension(), 1.0, rng));
  CHECK(m.log_unnormalized(std::vector<int>(9, 0)) == 0.0);
  for (int t = 0; t < 50; ++t) {
    std::vector<int> x(9);
    for (int& v : x) v = static_cast<int>(rng.below(2));
    CHECK(m.log_unnormalized(x) == doctest::Approx(oracle_log_unnormalized(s, m.parameters(), x)).epsilon(1e-14));
  }
  CHECK_THROWS(m.log_unnormalized(std::vector<int>(9, 2)));

  const auto edge = ModelStructure::from_cliques(2, CliqueSystem({Clique({0, 1})}), {2, 2});
  const MrfModel one(edge, {0.5});
  CHECK(one.log_unnormalized(std::vector<int>{1, 1}) == -0.5);
}

TEST_CASE("partition function") {
  const auto s = pairwise_structure(grid_graph(2, 3));
  CHECK(MrfModel(s, std::vector<double>(s.dimension(), 0.0)).log_partition_function() ==
        doctest::Approx(6 * std::log(2.0)));
  const auto single = ModelStructure::from_cliques(1, CliqueSystem({Clique({0})}), {2});
  CHECK(MrfModel(single, {0.8}).log_partition_function() == doctest::Approx(std::log(1 + std::exp(-0.8))));

  Rng rng(2);
  const auto grid = pairwise_structure(grid_graph(3, 3));
  const MrfModel m(grid, uniform_params(grid.dimension(), 1.0, rng));
  double z = 0;
  for (std::uint64_t st = 0; st < 512; ++st) {
    z += std::exp(oracle_log_unnormalized(grid, m.parameters(), decode_all(st, grid.cards())));
  }
  CHECK(m.log_partition_function() == doctest::Approx(std::log(z)).epsilon(1e-13));
  CHECK_THROWS_AS(m.log_partition_function(100), CapExceeded);
}

TEST_CASE("marginals") {
  Rng rng(3);
  const auto s = pairwise_structure(grid_graph(3, 3));
  const MrfModel m(s, uniform_params(s.dimension(), 1.0, rng));
  const auto joint = m.joint();
  CHECK(joint.sum() == doctest::Approx(1.0).epsilon(1e-12));
  NodeSet all{0, 1, 2, 3, 4, 5, 6, 7, 8};
  CHECK(m.exact_marginal(all).values == joint.values);

  // Marginalization chain: B = {3,4,6,7,8} down to A = {4,7}.
  const auto B = m.exact_marginal(grid_set({4, 5, 7, 8, 9}));
  const auto A = m.exact_marginal(grid_set({5, 8}));
  std::vector<double> summed(4, 0.0);
  std::vector<int> x(5);
  for (std::size_t f = 0; f < B.values.size(); ++f) {
    B.decode(f, x);
    summed[static_cast<std::size_t>(x[1] * 2 + x[3])] += B.values[f];
  }
  for (std::size_t k = 0; k < 4; ++k) CHECK(std::abs(summed[k] - A.values[k]) < 1e-12);

  // Independent nodes factor into unary marginals.
  const auto indep = pairwise_structure(UndirectedGraph(3));
  const MrfModel im(indep, {0.3, -0.5, 1.0});
  const auto ij = im.joint();
  for (std::size_t f = 0; f < 8; ++f) {
    std::vector<int> y(3);
    ij.decode(f, y);
    double p = 1;
    for (int k = 0; k < 3; ++k) {
      const double p1 = 1 / (1 + std::exp(im.parameters()[k]));
      p *= y[k] ? p1 : 1 - p1;
    }
    CHECK(ij.values[f] == doctest::Approx(p).epsilon(1e-13));
  }
}

TEST_CASE("conditionals") {
  Rng rng(4);
  const auto g = grid_graph(3, 3);
  const auto s = pairwise_structure(g);
  const MrfModel m(s, uniform_params(s.dimension(), 1.0, rng));
  const NodeId j = grid_id(5);
  auto blanket = neighbors(g, j);
  blanket.push_back(j);
  blanket = make_node_set(blanket);
  const auto cond = m.exact_conditional(j, blanket);
  const auto pos = static_cast<std::size_t>(std::find(blanket.begin(), blanket.end(), j) - blanket.begin());

  // Markov property: compare with the local-energy formula at full configurations.
  std::vector<int> x(9, 0), local(blanket.size());
  for (std::size_t f = 0; f < cond.table.values.size(); ++f) {
    cond.table.decode(f, local);
    for (std::size_t k = 0; k < blanket.size(); ++k) x[blanket[k]] = local[k];
    const double e0 = m.local_energy(j, x, 0), e1 = m.local_energy(j, x, 1);
    const double e = local[pos] ? e1 : e0;
    const double expect = std::exp(-e) / (std::exp(-e0) + std::exp(-e1));
    CHECK(cond.table.values[f] == doctest::Approx(expect).epsilon(1e-12));
  }

  // Full conditional equals the blanket conditional.
  const auto full = m.exact_conditional(j, NodeSet{0, 1, 2, 3, 4, 5, 6, 7, 8});
  std::vector<int> y(9);
  for (std::size_t f = 0; f < full.table.values.size(); ++f) {
    full.table.decode(f, y);
    for (std::size_t k = 0; k < blanket.size(); ++k) local[k] = y[blanket[k]];
    CHECK(full.table.values[f] == doctest::Approx(cond.table.values[cond.table.flat_index(local)]).epsilon(1e-11));
  }

  // Single edge: logistic in the coupling.
  const auto edge = ModelStructure::from_cliques(2, CliqueSystem({Clique({0}), Clique({0, 1})}), {2, 2});
  const MrfModel em(edge, {0.2, -0.9});
  const auto c = em.exact_conditional(0, {0, 1});
  CHECK(c.table.values[3] == doctest::Approx(1 / (1 + std::exp(0.2 - 0.9))));
  CHECK(c.table.values[2] == doctest::Approx(1 / (1 + std::exp(0.2))));
  CHECK_THROWS(em.exact_conditional(0, {1}));

  const MrfModel im(pairwise_structure(UndirectedGraph(2)), {0.4, 0.1});
  const auto ic = im.exact_conditional(0, {0, 1});
  CHECK(ic.table.values[2] == doctest::Approx(1 / (1 + std::exp(0.4))));
}

TEST_CASE("sufficient statistics") {
  const auto s = pairwise_structure(grid_graph(1, 3));
  const Dataset one(3, {1, 0, 1});
  const auto c1 = sufficient_statistics(one, s);
  for (const auto& counts : c1) {
    std::size_t total = 0;
    for (auto v : counts) total += v;
    CHECK(total == 1);
  }
  CHECK(c1[0] == std::vector<std::size_t>{0, 1});
  CHECK(c1[3] == std::vector<std::size_t>{0, 0, 1, 0});  // edge (0,1) at (1,0)

  const Dataset zeros(3, std::vector<int>(15, 0));
  for (const auto& counts : sufficient_statistics(zeros, s)) CHECK(counts[0] == 5);

  Rng rng(9);
  std::vector<int> vals(300);
  for (int& v : vals) v = static_cast<int>(rng.below(2));
  const Dataset d(3, vals);
  const auto stats = sufficient_statistics(d, s);
  const auto& layout = s.layout();
  for (std::size_t c = 0; c < layout.num_cliques(); ++c) {
    std::map<std::size_t, std::size_t> naive;
    for (std::size_t n = 0; n < d.num_samples(); ++n) {
      std::size_t f = 0;
      for (NodeId v : layout.clique(c)) f = f * 2 + static_cast<std::size_t>(d.row(n)[v]);
      ++naive[f];
    }
    for (std::size_t f = 0; f < stats[c].size(); ++f) CHECK(stats[c][f] == naive[f]);
  }
  CHECK_THROWS(sufficient_statistics(Dataset(3, {0, 2, 0}), s));
  CHECK_THROWS(sufficient_statistics(Dataset(2, {0, 0}), s));
}

TEST_CASE("exact sampling") {
  const auto s = pairwise_structure(UndirectedGraph(2));
  const MrfModel sharp(s, {-60.0, 60.0});  // forces (1, 0)
  Rng r1(5);
  const auto d = sample_exact(sharp, 50, r1);
  for (std::size_t n = 0; n < d.num_samples(); ++n) CHECK((d.row(n)[0] == 1 && d.row(n)[1] == 0));

  const auto s3 = pairwise_structure(UndirectedGraph(3));
  const MrfModel uniform(s3, std::vector<double>(3, 0.0));
  Rng r2(6);
  const std::size_t n = 100000;
  const auto data = sample_exact(uniform, n, r2);
  std::vector<double> freq(8, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    auto row = data.row(k);
    freq[static_cast<std::size_t>(row[0] * 4 + row[1] * 2 + row[2])] += 1;
  }
  const double sigma = std::sqrt(n * (1.0 / 8) * (7.0 / 8));
  for (double f : freq) CHECK(std::abs(f - n / 8.0) < 4 * sigma);

  Rng a(7), b(7);
  CHECK(sample_exact(uniform, 100, a) == sample_exact(uniform, 100, b));
}

TEST_CASE("Gibbs sampling") {
  const auto s = pairwise_structure(UndirectedGraph(3));
  const MrfModel indep(s, {0.5, -1.0, 0.0});
  Rng rng(10);
  const std::size_t n = 20000;
  const auto d = sample_gibbs(indep, n, GibbsConfig{100, 1}, rng);
  for (int k = 0; k < 3; ++k) {
    const double p1 = 1 / (1 + std::exp(indep.parameters()[k]));
    double ones = 0;
    for (std::size_t r = 0; r < n; ++r) ones += d.row(r)[k];
    CHECK(std::abs(ones - n * p1) < 4 * std::sqrt(n * p1 * (1 - p1)));
  }
  Rng a(3), b(3);
  CHECK(sample_gibbs(indep, 50, {}, a) == sample_gibbs(indep, 50, {}, b));

  // Chain on a coupled model approaches the exact pairwise marginal.
  Rng pr(12);
  const auto g = grid_graph(2, 2);
  const MrfModel m(pairwise_structure(g), uniform_params(8, 1.0, pr));
  Rng chain(13);
  const std::size_t big = 40000;
  const auto samples = sample_gibbs(m, big, GibbsConfig{200, 2}, chain);
  const auto pair = m.exact_marginal({0, 1});
  std::vector<double> freq(4, 0.0);
  for (std::size_t r = 0; r < big; ++r) freq[static_cast<std::size_t>(samples.row(r)[0] * 2 + samples.row(r)[1])] += 1.0 / big;
  for (std::size_t k = 0; k < 4; ++k) CHECK(std::abs(freq[k] - pair.values[k]) < 0.02);
}

TEST_CASE("dataset shape checks") {
  CHECK_THROWS(Dataset(3, {0, 1}));
  const Dataset d(2, {0, 1, 1, 1, 0, 0});
  CHECK(d.num_samples() == 3);
  CHECK(d.head(2) == Dataset(2, {0, 1, 1, 1}));
  CHECK(d.head(10) == d);
}
