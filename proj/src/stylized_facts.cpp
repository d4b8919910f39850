#include "corrvae/stylized_facts.hpp"

#include "corrvae/error.hpp"
#include "corrvae/linalg.hpp"
#include "corrvae/parallel.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <tuple>

namespace corrvae {

Histogram make_histogram(const std::vector<double>& values, double lo, double hi, int bins) {
  if (bins < 1 || !(hi > lo)) throw ConfigError("stylized-facts", "bad histogram range");
  Histogram h;
  h.lo = lo;
  h.hi = hi;
  h.mass.assign(static_cast<std::size_t>(bins), 0.0);
  if (values.empty()) return h;
  for (double v : values) {
    auto idx = static_cast<long>(std::floor((v - lo) / (hi - lo) * bins));
    idx = std::clamp<long>(idx, 0, bins - 1);
    h.mass[static_cast<std::size_t>(idx)] += 1.0;
  }
  for (auto& m : h.mass) m /= double(values.size());
  return h;
}

PairwiseDistribution pairwise_distribution(const MatrixPanel& panel, int bins) {
  if (panel.matrices.empty()) throw DataError("stylized-facts", "empty panel");
  std::vector<double> values;
  for (const auto& m : panel.matrices)
    for (Eigen::Index j = 1; j < m.dim(); ++j)
      for (Eigen::Index i = 0; i < j; ++i) values.push_back(m(i, j));

  PairwiseDistribution out;
  out.count = values.size();
  out.histogram = make_histogram(values, -1.0, 1.0, bins);
  if (values.empty()) return out;
  const double n = double(values.size());
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double m2 = 0.0, m3 = 0.0;
  std::size_t positive = 0;
  for (double v : values) {
    m2 += (v - out.mean) * (v - out.mean);
    m3 += (v - out.mean) * (v - out.mean) * (v - out.mean);
    if (v > 0.0) ++positive;
  }
  m2 /= n;
  m3 /= n;
  out.skewness = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
  out.fraction_positive = double(positive) / n;
  std::sort(values.begin(), values.end());
  const auto mid = values.size() / 2;
  out.median = values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
  return out;
}

double marchenko_pastur_density(double lambda, double q) {
  if (!(q > 1.0)) throw ConfigError("stylized-facts", "Marchenko-Pastur needs q > 1");
  const double lm = std::pow(1.0 - 1.0 / std::sqrt(q), 2);
  const double lp = std::pow(1.0 + 1.0 / std::sqrt(q), 2);
  if (lambda <= lm || lambda >= lp) return 0.0;
  return q / (2.0 * std::numbers::pi) * std::sqrt((lp - lambda) * (lambda - lm)) / lambda;
}

MarchenkoPasturReport marchenko_pastur_check(const CorrelationMatrix& s, double q, int bins) {
  if (!(q > 1.0)) throw ConfigError("stylized-facts", "Marchenko-Pastur needs q > 1");
  MarchenkoPasturReport r;
  r.q = q;
  r.lambda_minus = std::pow(1.0 - 1.0 / std::sqrt(q), 2);
  r.lambda_plus = std::pow(1.0 + 1.0 / std::sqrt(q), 2);
  const auto eig = eigh_symmetric(s.values()).eigenvalues;
  r.eigenvalues.assign(eig.data(), eig.data() + eig.size());
  r.lambda1 = r.eigenvalues.front();
  std::vector<double> bulk;
  for (double l : r.eigenvalues) {
    if (l > r.lambda_plus) {
      ++r.above_edge;
    } else {
      bulk.push_back(l);
    }
  }
  r.bulk = make_histogram(bulk, 0.0, r.lambda_plus, bins);
  for (std::size_t i = 0; i < r.bulk.mass.size(); ++i)
    r.density.push_back(marchenko_pastur_density(r.bulk.bin_center(i), q));
  return r;
}

PerronReport perron_frobenius_check(const CorrelationMatrix& s) {
  const auto eig = eigh_symmetric(s.values());
  PerronReport r;
  Eigen::VectorXd v = eig.eigenvectors.col(0);
  if (v.sum() < 0.0) v = -v;
  r.min_component = v.minCoeff();
  r.multiplicity_gap = eig.eigenvalues.size() > 1 ? eig.eigenvalues(0) - eig.eigenvalues(1)
                                                   : std::numeric_limits<double>::infinity();
  r.holds = r.min_component > 0.0 && r.multiplicity_gap > 1e-8;
  return r;
}

Linkage linkage_from_string(const std::string& name) {
  if (name == "single") return Linkage::single;
  if (name == "average") return Linkage::average;
  throw ConfigError("stylized-facts", "unknown linkage '" + name + "'");
}

std::string to_string(Linkage l) { return l == Linkage::single ? "single" : "average"; }

double correlation_distance(double rho) { return std::sqrt(std::max(0.0, 2.0 * (1.0 - rho))); }

std::vector<Merge> hierarchical_dendrogram(const CorrelationMatrix& s, Linkage linkage) {
  const int m = static_cast<int>(s.dim());
  std::vector<int> ids(static_cast<std::size_t>(m));
  std::vector<int> sizes(static_cast<std::size_t>(m), 1);
  std::iota(ids.begin(), ids.end(), 0);
  Eigen::MatrixXd dist(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) dist(i, j) = correlation_distance(s(i, j));

  // Active slots hold cluster ids; merged clusters reuse the lower slot.
  std::vector<bool> active(static_cast<std::size_t>(m), true);
  std::vector<Merge> merges;
  for (int step = 0; step + 1 < m; ++step) {
    int best_a = -1, best_b = -1;
    double best = std::numeric_limits<double>::infinity();
    std::pair<int, int> best_ids{0, 0};
    for (int a = 0; a < m; ++a) {
      if (!active[static_cast<std::size_t>(a)]) continue;
      for (int b = a + 1; b < m; ++b) {
        if (!active[static_cast<std::size_t>(b)]) continue;
        const std::pair<int, int> pair = std::minmax(ids[static_cast<std::size_t>(a)], ids[static_cast<std::size_t>(b)]);
        const double d = dist(a, b);
        if (d < best || (d == best && pair < best_ids)) {
          best = d;
          best_a = a;
          best_b = b;
          best_ids = pair;
        }
      }
    }
    const auto sa = static_cast<std::size_t>(best_a);
    const auto sb = static_cast<std::size_t>(best_b);
    merges.push_back({best_ids.first, best_ids.second, best, sizes[sa] + sizes[sb]});
    for (int k = 0; k < m; ++k) {
      if (!active[static_cast<std::size_t>(k)] || k == best_a || k == best_b) continue;
      double d = 0.0;
      if (linkage == Linkage::single) {
        d = std::min(dist(best_a, k), dist(best_b, k));
      } else {
        d = (sizes[sa] * dist(best_a, k) + sizes[sb] * dist(best_b, k)) / double(sizes[sa] + sizes[sb]);
      }
      dist(best_a, k) = dist(k, best_a) = d;
    }
    sizes[sa] += sizes[sb];
    ids[sa] = m + step;
    active[sb] = false;
  }
  return merges;
}

std::vector<int> dendrogram_order(const std::vector<Merge>& merges, int leaves) {
  std::vector<int> order;
  if (merges.empty()) {
    for (int i = 0; i < leaves; ++i) order.push_back(i);
    return order;
  }
  std::vector<int> stack{leaves + static_cast<int>(merges.size()) - 1};
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    if (id < leaves) {
      order.push_back(id);
    } else {
      const auto& mg = merges[static_cast<std::size_t>(id - leaves)];
      stack.push_back(mg.right);
      stack.push_back(mg.left);
    }
  }
  return order;
}

SpanningTree minimum_spanning_tree(const CorrelationMatrix& s) {
  const int m = static_cast<int>(s.dim());
  std::vector<MstEdge> edges;
  edges.reserve(static_cast<std::size_t>(m * (m - 1) / 2));
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) edges.push_back({i, j, correlation_distance(s(i, j))});
  std::stable_sort(edges.begin(), edges.end(), [](const MstEdge& l, const MstEdge& r) {
    if (l.weight != r.weight) return l.weight < r.weight;
    return std::tie(l.a, l.b) < std::tie(r.a, r.b);
  });

  std::vector<int> parent(static_cast<std::size_t>(m));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };

  SpanningTree tree;
  tree.degree.assign(static_cast<std::size_t>(m), 0);
  for (const auto& e : edges) {
    const int ra = find(e.a), rb = find(e.b);
    if (ra == rb) continue;
    parent[static_cast<std::size_t>(std::max(ra, rb))] = std::min(ra, rb);
    tree.edges.push_back(e);
    ++tree.degree[static_cast<std::size_t>(e.a)];
    ++tree.degree[static_cast<std::size_t>(e.b)];
    if (static_cast<int>(tree.edges.size()) == m - 1) break;
  }
  tree.max_degree = m > 0 ? *std::max_element(tree.degree.begin(), tree.degree.end()) : 0;
  tree.degree_histogram.assign(static_cast<std::size_t>(tree.max_degree + 1), 0);
  for (int d : tree.degree) ++tree.degree_histogram[static_cast<std::size_t>(d)];
  return tree;
}

StylizedFactReport stylized_fact_report(const MatrixPanel& panel, double q, Linkage linkage, int threads) {
  if (panel.matrices.empty()) throw DataError("stylized-facts", "empty panel");
  const auto n = panel.size();
  const auto m = panel.dim();

  std::vector<MarchenkoPasturReport> mp(n);
  std::vector<PerronReport> perron(n);
  std::vector<char> monotone(n, 1), spanning(n, 1);
  parallel_for(static_cast<long>(n), threads, [&](long k) {
    const auto i = static_cast<std::size_t>(k);
    const auto& s = panel.matrices[i];
    mp[i] = marchenko_pastur_check(s, q);
    perron[i] = perron_frobenius_check(s);
    const auto merges = hierarchical_dendrogram(s, linkage);
    for (std::size_t j = 1; j < merges.size(); ++j)
      if (merges[j].height < merges[j - 1].height - 1e-12) monotone[i] = 0;
    spanning[i] = static_cast<Eigen::Index>(minimum_spanning_tree(s).edges.size()) == m - 1;
  });

  StylizedFactReport r;
  r.matrices = n;
  r.q = q;
  r.lambda_plus = mp.front().lambda_plus;
  r.pairwise = pairwise_distribution(panel);
  r.mean_spectrum.assign(static_cast<std::size_t>(m), 0.0);
  r.min_perron_component = std::numeric_limits<double>::infinity();
  std::size_t above = 0, holds = 0, above_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j)
      r.mean_spectrum[static_cast<std::size_t>(j)] += mp[i].eigenvalues[static_cast<std::size_t>(j)] / double(n);
    if (mp[i].lambda1 > mp[i].lambda_plus) ++above;
    above_count += static_cast<std::size_t>(mp[i].above_edge);
    if (perron[i].holds) ++holds;
    r.min_perron_component = std::min(r.min_perron_component, perron[i].min_component);
    r.dendrograms_monotone = r.dendrograms_monotone && monotone[i];
    r.all_msts_spanning = r.all_msts_spanning && spanning[i];
  }
  r.fraction_lambda1_above_edge = double(above) / double(n);
  r.mean_eigenvalues_above_edge = double(above_count) / double(n);
  r.fraction_perron = double(holds) / double(n);
  r.sample_dendrogram = hierarchical_dendrogram(panel.matrices.front(), linkage);

  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(m, m);
  for (const auto& s : panel.matrices) mean += s.values();
  mean /= double(n);
  mean.diagonal().setOnes();
  r.mean_matrix_mst = minimum_spanning_tree(CorrelationMatrix::unchecked(panel.labels(), mean));
  return r;
}

std::string report_to_json(const StylizedFactReport& r) {
  nlohmann::json j;
  j["matrices"] = r.matrices;
  j["pairwise"] = {{"mean", r.pairwise.mean},
                   {"median", r.pairwise.median},
                   {"skewness", r.pairwise.skewness},
                   {"fraction_positive", r.pairwise.fraction_positive},
                   {"count", r.pairwise.count},
                   {"histogram", {{"lo", r.pairwise.histogram.lo},
                                  {"hi", r.pairwise.histogram.hi},
                                  {"mass", r.pairwise.histogram.mass}}}};
  j["marchenko_pastur"] = {{"q", r.q},
                           {"lambda_plus", r.lambda_plus},
                           {"mean_spectrum", r.mean_spectrum},
                           {"fraction_lambda1_above_edge", r.fraction_lambda1_above_edge},
                           {"mean_eigenvalues_above_edge", r.mean_eigenvalues_above_edge}};
  j["perron_frobenius"] = {{"fraction_holding", r.fraction_perron},
                           {"min_component", r.min_perron_component}};
  auto merges = nlohmann::json::array();
  for (const auto& mg : r.sample_dendrogram)
    merges.push_back({{"left", mg.left}, {"right", mg.right}, {"height", mg.height}, {"size", mg.size}});
  j["hierarchy"] = {{"monotone", r.dendrograms_monotone}, {"sample_merges", merges}};
  auto edges = nlohmann::json::array();
  for (const auto& e : r.mean_matrix_mst.edges)
    edges.push_back({{"a", e.a}, {"b", e.b}, {"weight", e.weight}});
  j["mst"] = {{"all_spanning", r.all_msts_spanning},
              {"mean_matrix_edges", edges},
              {"degree_histogram", r.mean_matrix_mst.degree_histogram},
              {"max_degree", r.mean_matrix_mst.max_degree}};
  return j.dump(2) + "\n";
}

}  // namespace corrvae
