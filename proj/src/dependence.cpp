#include "metocean/dependence.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <atomic>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <fmt/format.h>
#include <functional>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

#include "metocean/error.hpp"
#include "metocean/optimize.hpp"
#include "metocean/random.hpp"
#include "metocean/stats.hpp"

namespace metocean {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kBlockSize = 65536;
constexpr double kRhoBound = 0.999;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double log_sum_exp(const std::vector<double>& v) {
  double m = -kInf;
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

/// All set partitions of {0..m-1} as block lists (restricted growth strings).
std::vector<std::vector<std::vector<std::size_t>>> set_partitions(std::size_t m) {
  std::vector<std::vector<std::vector<std::size_t>>> out;
  std::vector<std::size_t> code(m, 0);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t pos, std::size_t blocks) {
    if (pos == m) {
      std::vector<std::vector<std::size_t>> p(blocks);
      for (std::size_t k = 0; k < m; ++k) p[code[k]].push_back(k);
      out.push_back(std::move(p));
      return;
    }
    for (std::size_t b = 0; b <= blocks; ++b) {
      code[pos] = b;
      rec(pos + 1, std::max(blocks, b + 1));
    }
  };
  if (m > 0) rec(0, 0);
  return out;
}

/// Runs `body(block, begin, end)` over fixed-size blocks on all hardware
/// threads. Results do not depend on the number of threads.
void for_each_block(std::size_t n, const std::function<void(std::size_t, std::size_t, std::size_t)>& body) {
  const std::size_t blocks = (n + kBlockSize - 1) / kBlockSize;
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), blocks));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto run = [&]() {
    for (std::size_t b = next++; b < blocks && !failed; b = next++) {
      try {
        body(b, b * kBlockSize, std::min(n, (b + 1) * kBlockSize));
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    run();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
}

Eigen::MatrixXd nearest_correlation(const Eigen::MatrixXd& a, bool& projected) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  projected = false;
  if (es.eigenvalues().minCoeff() > 1e-10) return a;
  projected = true;
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(1e-6);
  Eigen::MatrixXd b = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  const Eigen::VectorXd d = b.diagonal().cwiseSqrt().cwiseInverse();
  b = d.asDiagonal() * b * d.asDiagonal();
  return 0.5 * (b + b.transpose());
}

std::string conditioning_name(CeConditioning c) { return c == CeConditioning::Partition ? "partition" : "threshold"; }
std::string residual_name(CeResiduals r) { return r == CeResiduals::Empirical ? "empirical" : "gaussian"; }

/// Profile Gaussian log-likelihood of y = a x + x^b (mu + sigma eps).
struct CeProfile {
  const std::vector<double>& x;
  const std::vector<double>& y;
  std::vector<double> logx;

  CeProfile(const std::vector<double>& xs, const std::vector<double>& ys) : x(xs), y(ys) {
    for (double v : x) logx.push_back(std::log(v));
  }

  void moments(double a, double b, double& mu, double& sigma) const {
    const auto n = static_cast<double>(x.size());
    double s = 0.0, s2 = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double r = (y[k] - a * x[k]) * std::exp(-b * logx[k]);
      s += r;
      s2 += r * r;
    }
    mu = s / n;
    sigma = std::sqrt(std::max(0.0, s2 / n - mu * mu));
  }

  double loglik(double a, double b) const {
    double mu, sigma;
    moments(a, b, mu, sigma);
    if (!(sigma > 0.0)) return -kInf;
    double sl = 0.0;
    for (double l : logx) sl += l;
    const auto n = static_cast<double>(x.size());
    return -n * std::log(sigma) - b * sl - 0.5 * n;
  }
};

CeRegression fit_ce_pair(const std::vector<double>& x, const std::vector<double>& y, std::size_t target) {
  CeRegression reg;
  reg.target = target;
  double sxy = 0.0, sxx = 0.0, ymax = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += x[k] * y[k];
    sxx += x[k] * x[k];
    ymax = std::max(ymax, std::abs(y[k]));
  }
  const double c = sxy / sxx;
  double worst = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) worst = std::max(worst, std::abs(y[k] - c * x[k]));
  if (worst <= 1e-9 * std::max(ymax, 1e-300) && c >= 0.0 && c <= 1.0 + 1e-9) {
    reg.a = std::min(c, 1.0);
    reg.b = 0.0;
    reg.mu = 0.0;
    reg.sigma = 0.0;
    reg.boundary = true;
    return reg;
  }

  const CeProfile prof(x, y);
  double best_a = 0.0, best_b = 0.0, best = -kInf;
  for (int ia = 0; ia <= 20; ++ia) {
    for (int ib = 0; ib <= 20; ++ib) {
      const double a = 0.05 * ia;
      const double b = -1.0 + 0.095 * ib;
      const double v = prof.loglik(a, b);
      if (v > best) {
        best = v;
        best_a = a;
        best_b = b;
      }
    }
  }
  auto obj = [&](const std::vector<double>& p) {
    if (p[0] < 0.0 || p[0] > 1.0 || p[1] >= 1.0 || p[1] < -5.0) return kInf;
    return -prof.loglik(p[0], p[1]);
  };
  optimize::NelderMeadOptions opts;
  opts.initial_step = {0.04, 0.08};
  opts.x_tolerance = 1e-9;
  opts.f_tolerance = 1e-11;
  const auto r = optimize::nelder_mead(obj, {best_a, best_b}, opts);
  if (std::isfinite(r.value) && -r.value >= best) {
    best_a = r.x[0];
    best_b = r.x[1];
  }
  reg.a = best_a;
  reg.b = best_b;
  prof.moments(reg.a, reg.b, reg.mu, reg.sigma);
  reg.boundary = reg.a < 1e-4 || reg.a > 1.0 - 1e-4 || reg.b > 1.0 - 1e-3;
  if (!(reg.sigma > 0.0)) throw Error("conditional extremes: zero residual spread with a non-linear relation");
  return reg;
}

std::size_t argmax_row(const Eigen::MatrixXd& z, Eigen::Index r) {
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < z.cols(); ++c) {
    if (z(r, c) > z(r, best)) best = c;
  }
  return static_cast<std::size_t>(best);
}

/// Unit-Frechet draw conditioned on exceeding nu.
double frechet_above(Rng& rng, double nu) {
  const double tail = -std::expm1(-1.0 / nu);  // 1 - F(nu)
  const double w = uniform01(rng);
  return -1.0 / std::log1p(-tail * w);
}

void check_model_dims(const DependenceModel& model, std::size_t d) {
  std::visit(Overloaded{[&](const NatafModel& m) {
                          if (static_cast<std::size_t>(m.corr.rows()) != d) throw Error("Nataf matrix size does not match the margins");
                        },
                        [&](const ConditionalExtremesModel& m) {
                          if (m.partitions.size() != d) throw Error("conditional extremes model does not match the margins");
                        },
                        [](const auto&) {}},
             model);
}

}  // namespace

std::string model_name(const DependenceModel& model) {
  return std::visit(Overloaded{[](const std::monostate&) -> std::string { return "unfitted"; },
                               [](const IndependenceModel&) -> std::string { return "independence"; },
                               [](const PerfectDependenceModel&) -> std::string { return "perfect_dependence"; },
                               [](const NatafModel&) -> std::string { return "nataf"; },
                               [](const LogisticModel&) -> std::string { return "logistic"; },
                               [](const ConditionalExtremesModel&) -> std::string { return "conditional_extremes"; }},
                    model);
}

const std::vector<std::string>& model_names() {
  static const std::vector<std::string> names{"independence", "perfect_dependence", "nataf", "logistic",
                                              "conditional_extremes"};
  return names;
}

nlohmann::json model_to_json(const DependenceModel& model) {
  nlohmann::json j{{"schema_version", kDependenceSchemaVersion}, {"type", model_name(model)}};
  std::visit(Overloaded{[](const std::monostate&) { throw Error("unfitted model"); },
                        [](const IndependenceModel&) {}, [](const PerfectDependenceModel&) {},
                        [&](const NatafModel& m) {
                          std::vector<std::vector<double>> rows;
                          for (Eigen::Index r = 0; r < m.corr.rows(); ++r) {
                            rows.emplace_back();
                            for (Eigen::Index c = 0; c < m.corr.cols(); ++c) rows.back().push_back(m.corr(r, c));
                          }
                          j["corr"] = rows;
                          j["tail_quantile"] = m.tail_quantile;
                          j["boundary"] = m.boundary;
                          j["projected"] = m.projected;
                        },
                        [&](const LogisticModel& m) {
                          j["alpha"] = m.alpha;
                          j["censor_probability"] = m.censor_probability;
                          j["near_perfect"] = m.near_perfect;
                        },
                        [&](const ConditionalExtremesModel& m) {
                          j["nu"] = m.nu;
                          j["conditioning"] = conditioning_name(m.conditioning);
                          j["residuals"] = residual_name(m.residuals);
                          j["n_events"] = m.n_events;
                          j["body"] = m.body;
                          auto parts = nlohmann::json::array();
                          for (const auto& p : m.partitions) {
                            auto regs = nlohmann::json::array();
                            for (const auto& r : p.regressions) {
                              regs.push_back({{"target", r.target}, {"a", r.a}, {"b", r.b}, {"mu", r.mu},
                                              {"sigma", r.sigma}, {"boundary", r.boundary}});
                            }
                            parts.push_back({{"conditioning", p.conditioning},
                                             {"n_events", p.n_events},
                                             {"regressions", regs},
                                             {"residuals", p.residuals}});
                          }
                          j["partitions"] = parts;
                        }},
             model);
  return j;
}

DependenceModel model_from_json(const nlohmann::json& j) {
  if (j.value("schema_version", 0) != kDependenceSchemaVersion) {
    throw Error(fmt::format("dependence model: unsupported schema_version (expected {})", kDependenceSchemaVersion));
  }
  const auto type = j.at("type").get<std::string>();
  if (type == "independence") return IndependenceModel{};
  if (type == "perfect_dependence") return PerfectDependenceModel{};
  if (type == "nataf") {
    NatafModel m;
    const auto rows = j.at("corr").get<std::vector<std::vector<double>>>();
    const auto d = static_cast<Eigen::Index>(rows.size());
    m.corr.resize(d, d);
    for (Eigen::Index r = 0; r < d; ++r) {
      if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)].size()) != d) throw Error("Nataf matrix not square");
      for (Eigen::Index c = 0; c < d; ++c) m.corr(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    }
    Eigen::LLT<Eigen::MatrixXd> llt(m.corr);
    if (llt.info() != Eigen::Success || !m.corr.isApprox(m.corr.transpose())) {
      throw Error("Nataf matrix must be symmetric positive definite");
    }
    m.tail_quantile = j.value("tail_quantile", -1.0);
    m.boundary = j.value("boundary", false);
    m.projected = j.value("projected", false);
    return m;
  }
  if (type == "logistic") {
    LogisticModel m;
    m.alpha = j.at("alpha").get<double>();
    if (!(m.alpha > 0.0 && m.alpha <= 1.0)) throw Error("logistic alpha must lie in (0, 1]");
    m.censor_probability = j.value("censor_probability", 0.0);
    m.near_perfect = j.value("near_perfect", false);
    return m;
  }
  if (type == "conditional_extremes") {
    ConditionalExtremesModel m;
    m.nu = j.at("nu").get<double>();
    m.conditioning = j.value("conditioning", std::string{"partition"}) == "threshold" ? CeConditioning::Threshold
                                                                                     : CeConditioning::Partition;
    m.residuals = j.value("residuals", std::string{"empirical"}) == "gaussian" ? CeResiduals::Gaussian
                                                                               : CeResiduals::Empirical;
    m.n_events = j.at("n_events").get<std::size_t>();
    m.body = j.at("body").get<std::vector<std::vector<double>>>();
    for (const auto& pj : j.at("partitions")) {
      CePartition p;
      p.conditioning = pj.at("conditioning").get<std::size_t>();
      p.n_events = pj.at("n_events").get<std::size_t>();
      p.residuals = pj.at("residuals").get<std::vector<std::vector<double>>>();
      for (const auto& rj : pj.at("regressions")) {
        CeRegression r;
        r.target = rj.at("target").get<std::size_t>();
        r.a = rj.at("a").get<double>();
        r.b = rj.at("b").get<double>();
        r.mu = rj.at("mu").get<double>();
        r.sigma = rj.at("sigma").get<double>();
        r.boundary = rj.value("boundary", false);
        if (r.a < 0.0 || r.a > 1.0 || r.b >= 1.0 || r.sigma < 0.0) throw Error("conditional extremes parameters out of range");
        p.regressions.push_back(r);
      }
      m.partitions.push_back(std::move(p));
    }
    return m;
  }
  throw Error(fmt::format("unknown dependence model type '{}'", type));
}

double logistic_v(const Eigen::VectorXd& z, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw Error("logistic alpha must lie in (0, 1]");
  std::vector<double> terms;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (!(z[i] > 0.0)) throw Error("logistic V needs positive arguments");
    terms.push_back(-std::log(z[i]) / alpha);
  }
  return std::exp(alpha * log_sum_exp(terms));
}

double logistic_censored_log_term(const Eigen::VectorXd& z, const std::vector<std::size_t>& exceed, double alpha) {
  std::vector<double> terms;
  for (Eigen::Index i = 0; i < z.size(); ++i) terms.push_back(-std::log(z[i]) / alpha);
  const double log_s = log_sum_exp(terms);
  const double v = std::exp(alpha * log_s);
  if (exceed.empty()) return -v;

  // log(-dV/dz_B) for a block B of size m.
  auto log_block = [&](const std::vector<std::size_t>& block) {
    const auto m = block.size();
    double lc = std::log(alpha);
    for (std::size_t k = 1; k < m; ++k) {
      const double f = static_cast<double>(k) - alpha;
      if (f <= 0.0) return -kInf;
      lc += std::log(f);
    }
    lc += (alpha - static_cast<double>(m)) * log_s;
    for (std::size_t idx : block) {
      const double zi = z[static_cast<Eigen::Index>(exceed[idx])];
      lc += -std::log(alpha) - (1.0 / alpha + 1.0) * std::log(zi);
    }
    return lc;
  };

  std::vector<double> partition_terms;
  for (const auto& partition : set_partitions(exceed.size())) {
    double t = 0.0;
    for (const auto& block : partition) t += log_block(block);
    partition_terms.push_back(t);
  }
  return -v + log_sum_exp(partition_terms);
}

double gaussian_tail_correlation(double rho, double k1, double k2) {
  if (!(std::abs(rho) < 1.0)) throw Error("tail correlation needs |rho| < 1");
  const double s = std::sqrt(1.0 - rho * rho);
  auto phi = [](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); };
  // Moments of (X, Y) on {X > k1, Y > k2}, integrating Y analytically.
  auto moment = [&](int which) {
    auto f = [&](double x) {
      const double m = rho * x;
      const double a = (k2 - m) / s;
      const double q = 0.5 * std::erfc(a / std::sqrt(2.0));
      const double pa = phi(a);
      const double w = phi(x);
      switch (which) {
        case 0: return w * q;
        case 1: return w * x * q;
        case 2: return w * x * x * q;
        case 3: return w * (m * q + s * pa);
        case 4: return w * x * (m * q + s * pa);
        default: return w * (m * m * q + 2.0 * m * s * pa + s * s * (q + a * pa));
      }
    };
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, k1, kInf, 15, 1e-13);
  };
  const double p = moment(0);
  if (!(p > 0.0)) throw Error("tail region has zero probability");
  const double ex = moment(1) / p, ex2 = moment(2) / p, ey = moment(3) / p, exy = moment(4) / p, ey2 = moment(5) / p;
  const double vx = ex2 - ex * ex;
  const double vy = ey2 - ey * ey;
  return (exy - ex * ey) / std::sqrt(vx * vy);
}

NatafModel fit_nataf_scores(const Eigen::MatrixXd& scores, const std::vector<double>& levels) {
  const auto d = scores.cols();
  if (d < 2) throw Error("Nataf fit needs at least two variables");
  if (static_cast<Eigen::Index>(levels.size()) != d) throw Error("one tail level per variable is required");
  NatafModel m;
  m.corr = Eigen::MatrixXd::Identity(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i + 1; j < d; ++j) {
      std::vector<double> xi, xj;
      for (Eigen::Index r = 0; r < scores.rows(); ++r) {
        if (scores(r, i) > levels[static_cast<std::size_t>(i)] && scores(r, j) > levels[static_cast<std::size_t>(j)]) {
          xi.push_back(scores(r, i));
          xj.push_back(scores(r, j));
        }
      }
      if (xi.size() < 30) {
        throw Error(fmt::format("Nataf fit: only {} joint tail points for pair ({}, {}), need 30", xi.size(), i, j));
      }
      const double target = stats::pearson(xi, xj);
      const double k1 = levels[static_cast<std::size_t>(i)];
      const double k2 = levels[static_cast<std::size_t>(j)];
      auto g = [&](double rho) { return gaussian_tail_correlation(rho, k1, k2) - target; };
      // The implied tail correlation is increasing in rho only above its
      // minimum, which sits at negative rho once the tail levels are
      // positive. Bracket the root on that upper branch by scanning down
      // from the boundary.
      double rho = std::numeric_limits<double>::quiet_NaN();
      if (g(kRhoBound) <= 0.0) {
        rho = kRhoBound;
        m.boundary = true;
      } else {
        constexpr int kScan = 80;
        double hi = kRhoBound;
        for (int step = 1; step <= kScan; ++step) {
          const double lo = kRhoBound - 2.0 * kRhoBound * step / kScan;
          double glo;
          try {
            glo = g(lo);
          } catch (const Error&) {
            break;  // tail region with vanishing probability
          }
          if (glo <= 0.0) {
            rho = optimize::find_root(g, lo, hi, 1e-10);
            break;
          }
          hi = lo;
        }
        if (std::isnan(rho)) {
          throw Error(fmt::format("Nataf fit: no correlation root in (-1, 1) for pair ({}, {})", i, j));
        }
      }
      m.corr(i, j) = m.corr(j, i) = rho;
    }
  }
  m.corr = nearest_correlation(m.corr, m.projected);
  return m;
}

NatafModel fit_nataf(const ClusterMaxima& events, const MarginalSet& margins, double tail_quantile) {
  const auto scores = margins.to_normal_scores(events_matrix(events));
  std::vector<double> levels;
  for (const auto& mg : margins.margins) {
    const double p = tail_quantile < 0.0 ? 1.0 - mg.zeta() : tail_quantile;
    if (!(p > 0.0 && p < 1.0)) throw Error("Nataf tail quantile must lie in (0, 1)");
    levels.push_back(stats::normal_quantile(p));
  }
  auto m = fit_nataf_scores(scores, levels);
  m.tail_quantile = tail_quantile;
  return m;
}

LogisticModel fit_logistic_frechet(const Eigen::MatrixXd& z, double censor_z) {
  if (z.rows() < 30) throw Error(fmt::format("logistic fit needs at least 30 events, got {}", z.rows()));
  if (!(censor_z > 0.0)) throw Error("censoring level must be positive");
  struct Row {
    Eigen::VectorXd z;
    std::vector<std::size_t> exceed;
  };
  std::vector<Row> rows;
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    Row row{Eigen::VectorXd(z.cols()), {}};
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
      if (z(r, c) > censor_z) {
        row.z[c] = z(r, c);
        row.exceed.push_back(static_cast<std::size_t>(c));
      } else {
        row.z[c] = censor_z;
      }
    }
    rows.push_back(std::move(row));
  }
  auto negll = [&](double alpha) {
    double ll = 0.0;
    for (const auto& row : rows) ll += logistic_censored_log_term(row.z, row.exceed, alpha);
    return std::isfinite(ll) ? -ll : kInf;
  };
  constexpr double kLow = 0.02;
  const auto r = optimize::brent_minimize(negll, kLow, 1.0);
  LogisticModel m;
  m.alpha = std::clamp(r.x[0], kLow, 1.0);
  m.near_perfect = m.alpha < kLow + 0.01;
  return m;
}

LogisticModel fit_logistic(const ClusterMaxima& events, const MarginalSet& margins, double censor_probability) {
  if (!(censor_probability > 0.0 && censor_probability < 1.0)) throw Error("censor probability must lie in (0, 1)");
  const auto z = margins.to_frechet(events_matrix(events));
  auto m = fit_logistic_frechet(z, -1.0 / std::log(censor_probability));
  m.censor_probability = censor_probability;
  return m;
}

ConditionalExtremesModel fit_conditional_extremes_frechet(const Eigen::MatrixXd& z, double nu, const CeOptions& options) {
  if (!(nu > 0.0)) throw Error("conditional extremes threshold nu must be positive");
  const auto d = static_cast<std::size_t>(z.cols());
  if (d < 2) throw Error("conditional extremes needs at least two variables");
  ConditionalExtremesModel m;
  m.nu = nu;
  m.conditioning = options.conditioning;
  m.residuals = options.residuals;
  m.n_events = static_cast<std::size_t>(z.rows());

  std::vector<std::size_t> partition_count(d, 0);
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const auto k = argmax_row(z, r);
    if (z(r, static_cast<Eigen::Index>(k)) > nu) {
      ++partition_count[k];
    } else {
      std::vector<double> row;
      for (std::size_t c = 0; c < d; ++c) row.push_back(z(r, static_cast<Eigen::Index>(c)));
      m.body.push_back(std::move(row));
    }
  }

  for (std::size_t i = 0; i < d; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    std::vector<Eigen::Index> rows;
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
      if (!(z(r, ii) > nu)) continue;
      if (options.conditioning == CeConditioning::Partition && argmax_row(z, r) != i) continue;
      rows.push_back(r);
    }
    if (rows.size() < 20) {
      throw Error(fmt::format("conditional extremes: only {} conditioning events for variable {}, need 20", rows.size(), i));
    }
    CePartition part;
    part.conditioning = i;
    part.n_events = partition_count[i];
    std::vector<double> x;
    for (auto r : rows) x.push_back(z(r, ii));
    for (std::size_t j = 0; j < d; ++j) {
      if (j == i) continue;
      std::vector<double> y;
      for (auto r : rows) y.push_back(z(r, static_cast<Eigen::Index>(j)));
      part.regressions.push_back(fit_ce_pair(x, y, j));
    }
    for (std::size_t k = 0; k < rows.size(); ++k) {
      std::vector<double> eps;
      for (const auto& reg : part.regressions) {
        if (reg.sigma == 0.0) {
          eps.push_back(0.0);
          continue;
        }
        const double y = z(rows[k], static_cast<Eigen::Index>(reg.target));
        const double resid = (y - reg.a * x[k]) * std::pow(x[k], -reg.b);
        eps.push_back((resid - reg.mu) / reg.sigma);
      }
      part.residuals.push_back(std::move(eps));
    }
    m.partitions.push_back(std::move(part));
  }
  return m;
}

ConditionalExtremesModel fit_conditional_extremes(const ClusterMaxima& events, const MarginalSet& margins, double nu,
                                                  const CeOptions& options) {
  const auto z = margins.to_frechet(events_matrix(events));
  try {
    return fit_conditional_extremes_frechet(z, nu, options);
  } catch (const Error& e) {
    std::string msg = e.what();
    const auto names = margins.names();
    for (std::size_t i = 0; i < names.size(); ++i) {
      const auto key = fmt::format("for variable {}", i);
      const auto pos = msg.find(key);
      if (pos != std::string::npos) msg.replace(pos, key.size(), fmt::format("for variable {}", names[i]));
    }
    throw Error(msg);
  }
}

DependenceModel fit_dependence(const std::string& name, const ClusterMaxima& events, const MarginalSet& margins,
                               const DependenceSettings& settings) {
  if (name == "independence") return IndependenceModel{};
  if (name == "perfect_dependence") return PerfectDependenceModel{};
  if (name == "nataf") return fit_nataf(events, margins, settings.nataf_tail_quantile);
  if (name == "logistic") return fit_logistic(events, margins, settings.logistic_censor_probability);
  if (name == "conditional_extremes") {
    const double p = settings.ce_conditioning_probability;
    if (!(p > 0.0 && p < 1.0)) throw Error("conditioning probability must lie in (0, 1)");
    return fit_conditional_extremes(events, margins, -1.0 / std::log(p), settings.ce);
  }
  throw Error(fmt::format("unknown dependence model '{}'", name));
}

Eigen::MatrixXd simulate_logistic_frechet(double alpha, std::size_t d, std::size_t n, std::uint64_t seed) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw Error("logistic alpha must lie in (0, 1]");
  Eigen::MatrixXd z(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for_each_block(n, [&](std::size_t block, std::size_t begin, std::size_t end) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(block)));
    for (std::size_t r = begin; r < end; ++r) {
      const double log_s = std::log(positive_stable(rng, alpha));
      for (std::size_t c = 0; c < d; ++c) {
        z(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            std::exp(alpha * (log_s - std::log(standard_exponential(rng))));
      }
    }
  });
  return z;
}

SimulatedEvents simulate(const DependenceModel& model, const MarginalSet& margins, std::size_t n, std::uint64_t seed) {
  if (std::holds_alternative<std::monostate>(model)) throw Error("unfitted model");
  if (n == 0) throw Error("simulation size must be at least 1");
  margins.validate();
  const std::size_t d = margins.dim();
  check_model_dims(model, d);

  SimulatedEvents out;
  out.variables = margins.names();
  out.events_per_year = margins.events_per_year;
  out.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));

  Eigen::MatrixXd chol;
  if (const auto* nm = std::get_if<NatafModel>(&model)) {
    Eigen::LLT<Eigen::MatrixXd> llt(nm->corr);
    if (llt.info() != Eigen::Success) throw Error("Nataf matrix not positive definite");
    chol = llt.matrixL();
  }

  // CE category weights: body first, then one per partition.
  std::vector<double> cumulative;
  if (const auto* ce = std::get_if<ConditionalExtremesModel>(&model)) {
    double total = static_cast<double>(ce->body.size());
    cumulative.push_back(total);
    for (const auto& p : ce->partitions) {
      total += static_cast<double>(p.n_events);
      cumulative.push_back(total);
    }
    if (!(total > 0.0)) throw Error("conditional extremes model has no events");
    for (auto& c : cumulative) c /= total;
  }

  for_each_block(n, [&](std::size_t block, std::size_t begin, std::size_t end) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(block)));
    std::vector<double> log_p(d);
    Eigen::VectorXd g(static_cast<Eigen::Index>(d));
    for (std::size_t r = begin; r < end; ++r) {
      const auto row = static_cast<Eigen::Index>(r);
      std::visit(Overloaded{
                     [](const std::monostate&) {},
                     [&](const IndependenceModel&) {
                       for (std::size_t c = 0; c < d; ++c) log_p[c] = std::log(uniform01(rng));
                     },
                     [&](const PerfectDependenceModel&) {
                       const double lp = std::log(uniform01(rng));
                       for (std::size_t c = 0; c < d; ++c) log_p[c] = lp;
                     },
                     [&](const NatafModel&) {
                       for (std::size_t c = 0; c < d; ++c) g[static_cast<Eigen::Index>(c)] = standard_normal(rng);
                       const Eigen::VectorXd y = chol * g;
                       for (std::size_t c = 0; c < d; ++c) log_p[c] = log_normal_cdf(y[static_cast<Eigen::Index>(c)]);
                     },
                     [&](const LogisticModel& m) {
                       const double log_s = std::log(positive_stable(rng, m.alpha));
                       for (std::size_t c = 0; c < d; ++c) {
                         const double log_z = m.alpha * (log_s - std::log(standard_exponential(rng)));
                         log_p[c] = -std::exp(-log_z);
                       }
                     },
                     [&](const ConditionalExtremesModel& m) {
                       const double u = uniform01(rng);
                       const auto cat = static_cast<std::size_t>(
                           std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
                       if (cat == 0) {
                         const auto& b = m.body[uniform_index(rng, m.body.size())];
                         for (std::size_t c = 0; c < d; ++c) log_p[c] = -1.0 / b[c];
                         return;
                       }
                       const auto& part = m.partitions[std::min(cat - 1, m.partitions.size() - 1)];
                       for (int attempt = 0; attempt < 100000; ++attempt) {
                         const double zi = frechet_above(rng, m.nu);
                         bool ok = true;
                         std::vector<double> eps;
                         if (m.residuals == CeResiduals::Empirical) {
                           eps = part.residuals[uniform_index(rng, part.residuals.size())];
                         } else {
                           for (std::size_t k = 0; k < part.regressions.size(); ++k) eps.push_back(standard_normal(rng));
                         }
                         log_p[part.conditioning] = -1.0 / zi;
                         for (std::size_t k = 0; k < part.regressions.size(); ++k) {
                           const auto& reg = part.regressions[k];
                           const double zj = reg.a * zi + std::pow(zi, reg.b) * (reg.mu + reg.sigma * eps[k]);
                           if (!(zj > 0.0) || zj >= zi) {
                             ok = false;
                             break;
                           }
                           log_p[reg.target] = -1.0 / zj;
                         }
                         if (ok) return;
                       }
                       throw Error("conditional extremes simulation: partition constraint rejected every draw");
                     }},
                 model);
      for (std::size_t c = 0; c < d; ++c) {
        out.values(row, static_cast<Eigen::Index>(c)) = margins.margins[c].quantile_log(log_p[c]);
      }
    }
  });
  return out;
}

void write_simulated_csv(const SimulatedEvents& sim, std::ostream& out) {
  for (std::size_t c = 0; c < sim.variables.size(); ++c) out << (c ? "," : "") << sim.variables[c];
  out << '\n';
  for (Eigen::Index r = 0; r < sim.values.rows(); ++r) {
    for (Eigen::Index c = 0; c < sim.values.cols(); ++c) out << (c ? "," : "") << fmt::format("{}", sim.values(r, c));
    out << '\n';
  }
}

SimulatedEvents read_simulated_csv(std::istream& in, double events_per_year) {
  SimulatedEvents sim;
  sim.events_per_year = events_per_year;
  std::string line;
  if (!std::getline(in, line)) throw Error("empty simulated-events CSV");
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) sim.variables.push_back(cell);
  }
  std::vector<double> flat;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t cols = 0;
    while (std::getline(ss, cell, ',')) {
      flat.push_back(std::stod(cell));
      ++cols;
    }
    if (cols != sim.variables.size()) throw Error(fmt::format("simulated-events CSV row {}: wrong cell count", rows + 1));
    ++rows;
  }
  const auto d = static_cast<Eigen::Index>(sim.variables.size());
  sim.values.resize(static_cast<Eigen::Index>(rows), d);
  for (std::size_t r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < d; ++c)
      sim.values(static_cast<Eigen::Index>(r), c) = flat[r * static_cast<std::size_t>(d) + static_cast<std::size_t>(c)];
  return sim;
}

double empirical_chi(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double q) {
  if (x.size() != y.size() || x.size() == 0) throw Error("chi estimator needs two equal-length samples");
  const std::vector<double> xs(x.data(), x.data() + x.size());
  const std::vector<double> ys(y.data(), y.data() + y.size());
  const auto rx = stats::ranks(xs);
  const auto ry = stats::ranks(ys);
  const double denom = static_cast<double>(xs.size() + 1);
  std::size_t above = 0, both = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    if (rx[k] / denom > q) {
      ++above;
      if (ry[k] / denom > q) ++both;
    }
  }
  if (above == 0) throw Error("chi estimator: no points above the level");
  return static_cast<double>(both) / static_cast<double>(above);
}

}  // namespace metocean
