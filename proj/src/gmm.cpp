#include "latmod/gmm.hpp"

#include <nlohmann/json.hpp>

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>

namespace latmod {

using nlohmann::json;

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;  // log(2*pi)
}

std::string covariance_mode_name(CovarianceMode mode) {
  return mode == CovarianceMode::diagonal ? "diagonal" : "full";
}

CovarianceMode covariance_mode_from_name(const std::string& name) {
  if (name == "diagonal" || name == "diag") return CovarianceMode::diagonal;
  if (name == "full") return CovarianceMode::full;
  throw ValidationError("unknown covariance mode '" + name + "'");
}

void GmmModel::validate() const {
  const int m = components();
  if (m < 1) throw ValidationError("gmm: at least one component required");
  if (means.rows() != m) throw ShapeError("gmm: means row count does not match weights");
  double sum = 0.0;
  for (int i = 0; i < m; ++i) {
    if (!(weights(i) >= 0.0)) throw ValidationError("gmm: weights must be non-negative");
    sum += weights(i);
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ValidationError("gmm: weights must sum to 1 (got " + std::to_string(sum) + ")");
  }
  if (mode == CovarianceMode::diagonal) {
    if (static_cast<int>(diag_covs.size()) != m) throw ShapeError("gmm: missing diagonal covariances");
    for (const auto& v : diag_covs) {
      if (v.size() != means.cols()) throw ShapeError("gmm: covariance dim mismatch");
      if ((v.array() <= 0.0).any()) throw ValidationError("gmm: diagonal variances must be positive");
    }
  } else {
    if (static_cast<int>(full_covs.size()) != m) throw ShapeError("gmm: missing full covariances");
    for (const auto& c : full_covs) {
      if (c.rows() != means.cols() || c.cols() != means.cols()) {
        throw ShapeError("gmm: covariance dim mismatch");
      }
      Eigen::LLT<MatD> llt(c);
      if (llt.info() != Eigen::Success) {
        throw ValidationError("gmm: full covariance is not positive definite");
      }
    }
  }
}

void EmConfig::validate() const {
  if (components < 0) throw ValidationError("em config: components must be >= 0");
  if (max_iters < 1) throw ValidationError("em config: max_iters must be >= 1");
  if (!(rel_tol > 0.0)) throw ValidationError("em config: tolerance must be > 0");
  if (!(cov_floor > 0.0)) throw ValidationError("em config: covariance floor must be > 0");
  if (restarts < 1) throw ValidationError("em config: restarts must be >= 1");
}

int EmConfig::resolve_components(std::size_t n) const {
  if (components > 0) return components;
  return static_cast<int>(std::min<std::size_t>(1000, std::max<std::size_t>(1, n / 20)));
}

MatD kmeanspp_init(const MatD& X, int M, std::uint64_t seed) {
  const Eigen::Index n = X.rows();
  if (M < 1) throw ValidationError("kmeanspp_init: M must be >= 1");
  if (n < M) {
    throw ValidationError("kmeanspp_init: need at least M=" + std::to_string(M) +
                          " points, got " + std::to_string(n));
  }
  RandomSource rng(mix_seed(seed, "kmeans++"));
  MatD centers(M, X.cols());
  std::vector<bool> chosen(static_cast<std::size_t>(n), false);

  const Eigen::Index first = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
  centers.row(0) = X.row(first);
  chosen[static_cast<std::size_t>(first)] = true;

  VecD min_sq_dist(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    min_sq_dist(i) = (X.row(i) - centers.row(0)).squaredNorm();
  }

  for (int m = 1; m < M; ++m) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!chosen[static_cast<std::size_t>(i)]) total += min_sq_dist(i);
    }
    Eigen::Index pick = -1;
    if (total > 0.0) {
      const double target = rng.uniform01() * total;
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (chosen[static_cast<std::size_t>(i)]) continue;
        acc += min_sq_dist(i);
        if (acc >= target) {
          pick = i;
          break;
        }
      }
      if (pick < 0) {  // numeric edge: fall back to the last unchosen point
        for (Eigen::Index i = n; i-- > 0;) {
          if (!chosen[static_cast<std::size_t>(i)]) {
            pick = i;
            break;
          }
        }
      }
    } else {
      // All remaining points coincide with chosen centers; pick uniformly.
      std::vector<Eigen::Index> remaining;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!chosen[static_cast<std::size_t>(i)]) remaining.push_back(i);
      }
      pick = remaining[rng.below(remaining.size())];
    }
    chosen[static_cast<std::size_t>(pick)] = true;
    centers.row(m) = X.row(pick);
    for (Eigen::Index i = 0; i < n; ++i) {
      min_sq_dist(i) = std::min(min_sq_dist(i), (X.row(i) - centers.row(m)).squaredNorm());
    }
  }
  return centers;
}

namespace {

// Per-component log densities for all rows of X (n x M).
MatD component_log_densities(const GmmModel& model, const MatD& X) {
  const Eigen::Index n = X.rows();
  const int m_count = model.components();
  if (X.cols() != model.means.cols()) {
    throw ShapeError("gmm: data dim " + std::to_string(X.cols()) + " does not match model dim " +
                     std::to_string(model.means.cols()));
  }
  MatD logp(n, m_count);
  const double q = static_cast<double>(X.cols());
  if (model.mode == CovarianceMode::diagonal) {
    for (int m = 0; m < m_count; ++m) {
      const VecD& var = model.diag_covs[static_cast<std::size_t>(m)];
      const double log_norm = -0.5 * (q * kLog2Pi + var.array().log().sum());
      const VecD inv_var = var.cwiseInverse();
      for (Eigen::Index i = 0; i < n; ++i) {
        const VecD diff = (X.row(i).transpose() - model.means.row(m).transpose());
        logp(i, m) = log_norm - 0.5 * diff.array().square().matrix().dot(inv_var);
      }
    }
  } else {
    for (int m = 0; m < m_count; ++m) {
      Eigen::LLT<MatD> llt(model.full_covs[static_cast<std::size_t>(m)]);
      if (llt.info() != Eigen::Success) {
        throw NumericError("gmm: Cholesky failed for component " + std::to_string(m));
      }
      const MatD L = llt.matrixL();
      const double log_det = 2.0 * L.diagonal().array().log().sum();
      const double log_norm = -0.5 * (q * kLog2Pi + log_det);
      for (Eigen::Index i = 0; i < n; ++i) {
        const VecD diff = X.row(i).transpose() - model.means.row(m).transpose();
        const VecD solved = L.triangularView<Eigen::Lower>().solve(diff);
        logp(i, m) = log_norm - 0.5 * solved.squaredNorm();
      }
    }
  }
  return logp;
}

// Row-wise log-sum-exp of logp + log(w); also writes responsibilities if out != nullptr.
VecD mixture_log_likelihoods(const GmmModel& model, const MatD& logp, MatD* responsibilities) {
  const Eigen::Index n = logp.rows();
  const int m_count = model.components();
  VecD log_w(m_count);
  for (int m = 0; m < m_count; ++m) {
    log_w(m) = std::log(std::max(model.weights(m), 1e-300));
  }
  VecD ll(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (int m = 0; m < m_count; ++m) best = std::max(best, logp(i, m) + log_w(m));
    double sum = 0.0;
    for (int m = 0; m < m_count; ++m) sum += std::exp(logp(i, m) + log_w(m) - best);
    ll(i) = best + std::log(sum);
    if (responsibilities != nullptr) {
      for (int m = 0; m < m_count; ++m) {
        (*responsibilities)(i, m) = std::exp(logp(i, m) + log_w(m) - ll(i));
      }
    }
  }
  return ll;
}

void m_step(const MatD& X, const MatD& gamma, double cov_floor, GmmModel& model,
            int* rescued_components) {
  const Eigen::Index n = X.rows();
  const Eigen::Index q = X.cols();
  const int m_count = model.components();
  const VecD global_mean = X.colwise().mean();
  const VecD global_var =
      ((X.rowwise() - global_mean.transpose()).array().square().colwise().sum() /
       static_cast<double>(n))
          .cwiseMax(cov_floor);

  std::vector<int> empty;
  for (int m = 0; m < m_count; ++m) {
    const double mass = gamma.col(m).sum();
    if (mass < 1e-10) {
      empty.push_back(m);
      continue;
    }
    model.weights(m) = mass / static_cast<double>(n);
    model.means.row(m) = (gamma.col(m).transpose() * X) / mass;
    if (model.mode == CovarianceMode::diagonal) {
      VecD var = VecD::Zero(q);
      for (Eigen::Index i = 0; i < n; ++i) {
        var += gamma(i, m) * (X.row(i) - model.means.row(m)).array().square().matrix().transpose();
      }
      model.diag_covs[static_cast<std::size_t>(m)] = (var / mass).cwiseMax(cov_floor);
    } else {
      MatD cov = MatD::Zero(q, q);
      for (Eigen::Index i = 0; i < n; ++i) {
        const VecD diff = X.row(i).transpose() - model.means.row(m).transpose();
        cov += gamma(i, m) * (diff * diff.transpose());
      }
      cov /= mass;
      cov += cov_floor * MatD::Identity(q, q);
      model.full_covs[static_cast<std::size_t>(m)] = cov;
    }
  }

  if (!empty.empty()) {
    // Re-seed collapsed components at the worst-explained points.
    const MatD logp = component_log_densities(model, X);
    const VecD ll = mixture_log_likelihoods(model, logp, nullptr);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index a, Eigen::Index b) { return ll(a) < ll(b); });
    for (std::size_t e = 0; e < empty.size(); ++e) {
      const int m = empty[e];
      const Eigen::Index point = order[e % order.size()];
      model.means.row(m) = X.row(point);
      model.weights(m) = 1.0 / static_cast<double>(n);
      if (model.mode == CovarianceMode::diagonal) {
        model.diag_covs[static_cast<std::size_t>(m)] = global_var;
      } else {
        model.full_covs[static_cast<std::size_t>(m)] =
            MatD(global_var.asDiagonal()) + cov_floor * MatD::Identity(q, q);
      }
      if (rescued_components != nullptr) ++(*rescued_components);
    }
    log_warn("em_fit: re-seeded " + std::to_string(empty.size()) + " empty component(s)");
  }
  model.weights /= model.weights.sum();
}

EmResult em_fit_once(const MatD& X, const EmConfig& cfg, int components, std::uint64_t seed) {
  const Eigen::Index n = X.rows();
  const Eigen::Index q = X.cols();

  EmResult result;
  GmmModel& model = result.model;
  model.mode = cfg.mode;
  model.seed = seed;
  model.weights = VecD::Constant(components, 1.0 / components);
  model.means = kmeanspp_init(X, components, seed);

  const VecD global_mean = X.colwise().mean();
  const VecD global_var =
      ((X.rowwise() - global_mean.transpose()).array().square().colwise().sum() /
       static_cast<double>(n))
          .cwiseMax(cfg.cov_floor);
  if (model.mode == CovarianceMode::diagonal) {
    model.diag_covs.assign(static_cast<std::size_t>(components), global_var);
  } else {
    model.full_covs.assign(static_cast<std::size_t>(components),
                           MatD(global_var.asDiagonal()) + cfg.cov_floor * MatD::Identity(q, q));
  }

  MatD gamma(n, components);
  double prev_ll = -std::numeric_limits<double>::infinity();
  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    const MatD logp = component_log_densities(model, X);
    mixture_log_likelihoods(model, logp, &gamma);
    m_step(X, gamma, cfg.cov_floor, model, nullptr);

    const MatD logp_new = component_log_densities(model, X);
    const double ll = mixture_log_likelihoods(model, logp_new, nullptr).mean();
    result.ll_history.push_back(ll);
    model.iterations = iter;
    model.final_ll = ll;
    if (iter >= 2 && std::abs(ll - prev_ll) <= cfg.rel_tol * std::abs(prev_ll)) break;
    prev_ll = ll;
  }
  return result;
}

}  // namespace

EmResult em_fit(const MatD& X, const EmConfig& cfg) {
  cfg.validate();
  const std::size_t n = static_cast<std::size_t>(X.rows());
  if (n == 0) throw ValidationError("em_fit: empty data");
  const int components = cfg.resolve_components(n);
  if (n < static_cast<std::size_t>(components)) {
    throw ValidationError("em_fit: need at least M=" + std::to_string(components) +
                          " samples, got " + std::to_string(n));
  }

  EmResult best;
  for (int r = 0; r < cfg.restarts; ++r) {
    const std::uint64_t seed = cfg.restarts == 1 ? cfg.seed : mix_seed(cfg.seed, "restart", r);
    EmResult candidate = em_fit_once(X, cfg, components, seed);
    if (r == 0 || candidate.model.final_ll > best.model.final_ll) {
      best = std::move(candidate);
    }
  }
  best.model.validate();
  return best;
}

double log_likelihood(const GmmModel& model, const VecD& x) {
  MatD row(1, x.size());
  row.row(0) = x.transpose();
  return per_sample_log_likelihood(model, row)(0);
}

VecD per_sample_log_likelihood(const GmmModel& model, const MatD& X) {
  const MatD logp = component_log_densities(model, X);
  return mixture_log_likelihoods(model, logp, nullptr);
}

double mean_log_likelihood(const GmmModel& model, const MatD& X) {
  return per_sample_log_likelihood(model, X).mean();
}

MatD e_step_responsibilities(const GmmModel& model, const MatD& X) {
  MatD gamma(X.rows(), model.components());
  const MatD logp = component_log_densities(model, X);
  mixture_log_likelihoods(model, logp, &gamma);
  return gamma;
}

MatD gmm_sample(const GmmModel& model, std::size_t n, std::uint64_t seed) {
  model.validate();
  const Eigen::Index q = model.means.cols();
  RandomSource rng(mix_seed(seed, "gmm-sample"));

  // Precompute Cholesky factors for full covariances.
  std::vector<MatD> chol;
  if (model.mode == CovarianceMode::full) {
    chol.reserve(model.full_covs.size());
    for (const auto& cov : model.full_covs) {
      Eigen::LLT<MatD> llt(cov);
      if (llt.info() != Eigen::Success) {
        throw NumericError("gmm_sample: Cholesky failed");
      }
      chol.push_back(llt.matrixL());
    }
  }

  MatD out(static_cast<Eigen::Index>(n), q);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform01();
    int m = 0;
    double acc = 0.0;
    for (; m < model.components(); ++m) {
      acc += model.weights(m);
      if (u < acc) break;
    }
    m = std::min(m, model.components() - 1);

    VecD z(q);
    for (Eigen::Index j = 0; j < q; ++j) z(j) = rng.normal();
    if (model.mode == CovarianceMode::diagonal) {
      out.row(static_cast<Eigen::Index>(i)) =
          model.means.row(m) +
          (model.diag_covs[static_cast<std::size_t>(m)].array().sqrt() * z.array())
              .matrix()
              .transpose();
    } else {
      out.row(static_cast<Eigen::Index>(i)) =
          model.means.row(m) + (chol[static_cast<std::size_t>(m)] * z).transpose();
    }
  }
  return out;
}

void check_group_subset_size(std::size_t n, int components, const std::string& group_name) {
  const std::size_t m = static_cast<std::size_t>(components);
  if (n < 5 * m) {
    throw ValidationError("group '" + group_name + "' has " + std::to_string(n) +
                          " samples, fewer than 5*M=" + std::to_string(5 * m));
  }
  if (n < 20 * m) {
    log_warn("group '" + group_name + "' has " + std::to_string(n) +
             " samples, below the recommended 20*M=" + std::to_string(20 * m));
  }
}

// ---------------------------------------------------------------------------
// LGMM container
// ---------------------------------------------------------------------------

namespace {
constexpr char kLgmmMagic[4] = {'L', 'G', 'M', 'M'};
constexpr std::uint32_t kLgmmVersion = 1;
}  // namespace

void save_gmm(const GmmModel& model, const std::string& path) {
  model.validate();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path + "' for writing");

  json meta;
  meta["group"] = model.group.to_json();
  meta["final_ll"] = model.final_ll;
  meta["iterations"] = model.iterations;
  meta["seed"] = model.seed;
  const std::string blob = meta.dump();

  os.write(kLgmmMagic, 4);
  write_u32(os, kLgmmVersion);
  write_u32(os, static_cast<std::uint32_t>(blob.size()));
  os.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  write_u32(os, static_cast<std::uint32_t>(model.components()));
  write_u32(os, static_cast<std::uint32_t>(model.dim()));
  os.put(model.mode == CovarianceMode::diagonal ? 0 : 1);

  write_f64_array(os, model.weights.data(), static_cast<std::size_t>(model.weights.size()));
  write_f64_array(os, model.means.data(), static_cast<std::size_t>(model.means.size()));
  if (model.mode == CovarianceMode::diagonal) {
    for (const auto& v : model.diag_covs) {
      write_f64_array(os, v.data(), static_cast<std::size_t>(v.size()));
    }
  } else {
    for (const auto& c : model.full_covs) {
      write_f64_array(os, c.data(), static_cast<std::size_t>(c.size()));
    }
  }
  if (!os) throw IoError("write to '" + path + "' failed");
}

GmmModel load_gmm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "'");
  char magic[4];
  is.read(magic, 4);
  if (is.gcount() != 4 || std::memcmp(magic, kLgmmMagic, 4) != 0) {
    throw FormatError("'" + path + "': bad LGMM magic");
  }
  const std::uint32_t version = read_u32(is);
  if (version != kLgmmVersion) {
    throw FormatError("'" + path + "': unsupported LGMM version " + std::to_string(version));
  }
  const std::uint32_t blob_len = read_u32(is);
  std::string blob(blob_len, '\0');
  is.read(blob.data(), blob_len);
  if (is.gcount() != static_cast<std::streamsize>(blob_len)) {
    throw FormatError("'" + path + "': truncated metadata blob");
  }
  json meta;
  try {
    meta = json::parse(blob);
  } catch (const json::exception& e) {
    throw FormatError("'" + path + "': metadata blob is not valid JSON: " + e.what());
  }

  GmmModel model;
  model.group = GroupSelector::from_json(meta.at("group"));
  model.final_ll = meta.value("final_ll", 0.0);
  model.iterations = meta.value("iterations", 0);
  model.seed = meta.value("seed", std::uint64_t{0});

  const std::uint32_t m_count = read_u32(is);
  const std::uint32_t q = read_u32(is);
  const int mode_byte = is.get();
  if (mode_byte != 0 && mode_byte != 1) {
    throw FormatError("'" + path + "': invalid covariance mode byte");
  }
  model.mode = mode_byte == 0 ? CovarianceMode::diagonal : CovarianceMode::full;

  model.weights.resize(m_count);
  read_f64_array(is, model.weights.data(), m_count);
  model.means.resize(m_count, q);
  read_f64_array(is, model.means.data(), static_cast<std::size_t>(m_count) * q);
  if (model.mode == CovarianceMode::diagonal) {
    model.diag_covs.resize(m_count);
    for (auto& v : model.diag_covs) {
      v.resize(q);
      read_f64_array(is, v.data(), q);
    }
  } else {
    model.full_covs.resize(m_count);
    for (auto& c : model.full_covs) {
      c.resize(q, q);
      read_f64_array(is, c.data(), static_cast<std::size_t>(q) * q);
    }
  }
  model.validate();
  return model;
}

}  // namespace latmod
