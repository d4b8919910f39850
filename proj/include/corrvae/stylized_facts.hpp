#pragma once

#include "corrvae/corrdata.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace corrvae {

/// Equal-width histogram; masses sum to 1.
struct Histogram {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<double> mass;

  double bin_width() const { return (hi - lo) / double(mass.size()); }
  double bin_center(std::size_t i) const { return lo + (double(i) + 0.5) * bin_width(); }
};

Histogram make_histogram(const std::vector<double>& values, double lo, double hi, int bins);

struct PairwiseDistribution {
  Histogram histogram;
  double mean = 0.0;
  double median = 0.0;
  double skewness = 0.0;
  double fraction_positive = 0.0;
  std::size_t count = 0;
};

/// Pooled strictly-upper-triangle entries of every matrix in the panel.
PairwiseDistribution pairwise_distribution(const MatrixPanel& panel, int bins = 40);

struct MarchenkoPasturReport {
  double q = 0.0;
  double lambda_minus = 0.0;
  double lambda_plus = 0.0;
  double lambda1 = 0.0;
  int above_edge = 0;
  std::vector<double> eigenvalues;  // descending
  Histogram bulk;                   // eigenvalues <= lambda_plus, as a density-normalized mass
  std::vector<double> density;      // MP density at the bulk bin centers
};

/// Marchenko-Pastur density for unit-variance data with q = T / M > 1.
double marchenko_pastur_density(double lambda, double q);
MarchenkoPasturReport marchenko_pastur_check(const CorrelationMatrix& s, double q, int bins = 20);

struct PerronReport {
  bool holds = false;
  double min_component = 0.0;   // after sign normalization
  double multiplicity_gap = 0.0;  // lambda1 - lambda2
};

PerronReport perron_frobenius_check(const CorrelationMatrix& s);

enum class Linkage { single, average };

Linkage linkage_from_string(const std::string& name);
std::string to_string(Linkage l);

/// Cluster ids follow the usual convention: leaves 0..M-1, merge k creates M + k.
struct Merge {
  int left = 0;
  int right = 0;
  double height = 0.0;
  int size = 0;
};

/// d(i, j) = sqrt(2 (1 - rho_ij)), clamped at zero.
double correlation_distance(double rho);

std::vector<Merge> hierarchical_dendrogram(const CorrelationMatrix& s, Linkage linkage = Linkage::average);

/// Leaf order of the dendrogram, left to right.
std::vector<int> dendrogram_order(const std::vector<Merge>& merges, int leaves);

struct MstEdge {
  int a = 0;
  int b = 0;
  double weight = 0.0;
};

struct SpanningTree {
  std::vector<MstEdge> edges;
  std::vector<int> degree;            // per node
  std::vector<int> degree_histogram;  // index = degree
  int max_degree = 0;
};

/// Kruskal on the complete distance graph; ties broken by (i, j) order.
SpanningTree minimum_spanning_tree(const CorrelationMatrix& s);

/// Panel-level summary of all five checks.
struct StylizedFactReport {
  PairwiseDistribution pairwise;
  double q = 0.0;
  double lambda_plus = 0.0;
  std::vector<double> mean_spectrum;  // eigenvalues averaged over the panel
  double fraction_lambda1_above_edge = 0.0;
  double mean_eigenvalues_above_edge = 0.0;
  double fraction_perron = 0.0;
  double min_perron_component = 0.0;
  bool dendrograms_monotone = true;
  std::vector<Merge> sample_dendrogram;  // of the first matrix
  bool all_msts_spanning = true;
  SpanningTree mean_matrix_mst;
  std::size_t matrices = 0;
};

StylizedFactReport stylized_fact_report(const MatrixPanel& panel, double q,
                                        Linkage linkage = Linkage::average, int threads = 1);
std::string report_to_json(const StylizedFactReport& report);

}  // namespace corrvae
