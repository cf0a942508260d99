#ifndef LATMOD_GMM_HPP
#define LATMOD_GMM_HPP

#include "latmod/core.hpp"
#include "latmod/dataset.hpp"

#include <string>
#include <vector>

namespace latmod {

enum class CovarianceMode { diagonal, full };

std::string covariance_mode_name(CovarianceMode mode);
CovarianceMode covariance_mode_from_name(const std::string& name);

// Per-group Gaussian mixture over the bottleneck space.
struct GmmModel {
  GroupSelector group;
  CovarianceMode mode = CovarianceMode::diagonal;
  VecD weights;                    // M, on the simplex
  MatD means;                      // M x q
  std::vector<VecD> diag_covs;     // diagonal mode: M vectors of per-dim variance
  std::vector<MatD> full_covs;     // full mode: M SPD matrices
  double final_ll = 0.0;           // mean per-sample log-likelihood at convergence
  int iterations = 0;
  std::uint64_t seed = 0;

  int components() const { return static_cast<int>(weights.size()); }
  int dim() const { return static_cast<int>(means.cols()); }
  void validate() const;
};

struct EmConfig {
  int components = 0;          // 0 = auto: min(1000, max(1, n/20))
  int max_iters = 200;
  double rel_tol = 1e-6;
  double cov_floor = 1e-6;
  std::uint64_t seed = 0;
  int restarts = 1;
  CovarianceMode mode = CovarianceMode::diagonal;

  void validate() const;
  int resolve_components(std::size_t n) const;
};

// k-means++ seeding: first center uniform, each further center drawn with
// probability proportional to squared distance to the nearest chosen center.
MatD kmeanspp_init(const MatD& X, int M, std::uint64_t seed);

struct EmResult {
  GmmModel model;
  std::vector<double> ll_history;  // mean per-sample LL after each M-step
};

EmResult em_fit(const MatD& X, const EmConfig& cfg);

double log_likelihood(const GmmModel& model, const VecD& x);
double mean_log_likelihood(const GmmModel& model, const MatD& X);
VecD per_sample_log_likelihood(const GmmModel& model, const MatD& X);

// n x M row-stochastic responsibilities, normalized in the log domain.
MatD e_step_responsibilities(const GmmModel& model, const MatD& X);

MatD gmm_sample(const GmmModel& model, std::size_t n, std::uint64_t seed);

// Group-subset size guard used when fitting per-demographic models:
// errors below 5M samples, warns below 20M.
void check_group_subset_size(std::size_t n, int components, const std::string& group_name);

void save_gmm(const GmmModel& model, const std::string& path);
GmmModel load_gmm(const std::string& path);

}  // namespace latmod

#endif  // LATMOD_GMM_HPP
