#include "softac/verify.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "softac/diagnostics.hpp"
#include "softac/harness.hpp"
#include "softac/rng.hpp"

namespace softac {

namespace {

// Pinned grid parameters. The rate and tau0 suites use a lower discount so
// that the asymptotic regime of the theorems is reached within the iteration
// budget; the schedule constants always sit at the corollary floors for the
// run's own (tau, A, gamma).
constexpr int kGridStates = 10;
constexpr int kGridActions = 5;
constexpr int kGridBranching = 3;
constexpr double kGridGamma = 0.9;
constexpr double kGridTau = 0.1;
constexpr double kRateGamma = 0.15;
constexpr double kTau0Gamma = 0.6;

struct CellResult {
  std::vector<VerifyCheck> checks;
  std::string csv;
};

RunConfig theory_config(AlgorithmFamily family, double gamma, double tau, double zeta,
                        int m_steps, int iterations, std::uint64_t seed) {
  RunConfig cfg;
  cfg.env.name = "garnet";
  cfg.env.num_states = kGridStates;
  cfg.env.num_actions = kGridActions;
  cfg.env.branching = kGridBranching;
  cfg.env.gamma = gamma;
  cfg.family = family;
  cfg.mode = RunMode::kExact;
  cfg.tau = tau;
  cfg.zeta = zeta;
  cfg.m_steps = m_steps;
  cfg.iterations = iterations;
  cfg.seed = seed;
  cfg.clamp_output = true;
  cfg.store_policies = true;
  cfg.store_q = true;
  cfg.exact_reference = true;
  cfg.solve_tol = 1e-11;
  return cfg;
}

double family_c_floor(AlgorithmFamily family, double tau, int A, double gamma) {
  return family == AlgorithmFamily::kNpgRkl ? npg_c_floor(tau, A, gamma)
                                            : spma_c_floor(tau, A, gamma);
}

double subopt_bound(AlgorithmFamily family, int K, double tau, double zeta, int A, double gamma,
                    double c, int m) {
  return family == AlgorithmFamily::kNpgRkl
             ? subopt_bound_soft_npg(K, tau, zeta, A, gamma, c, m)
             : subopt_bound_soft_spma(K, tau, zeta, A, gamma, c, m);
}

std::string m_label(int m) { return m == kInfiniteSteps ? "inf" : std::to_string(m); }

VerifyCheck make_check(std::string name, double lhs, double rhs, bool holds, double tol,
                       std::uint64_t seed, bool in_hypothesis = true) {
  VerifyCheck c;
  c.name = std::move(name);
  c.lhs = lhs;
  c.rhs = rhs;
  c.holds = holds;
  c.tolerance = tol;
  c.seed = seed;
  c.status = !in_hypothesis ? "out_of_hypothesis" : (holds ? "pass" : "fail");
  return c;
}

// ---- reduction suite: Theorem-1 inequality over the (method, zeta, m) grid.
CellResult reduction_cell(AlgorithmFamily family, double zeta, int m, std::uint64_t seed) {
  CellResult out;
  const double c = family_c_floor(family, kGridTau, kGridActions, kGridGamma);
  RunConfig cfg = theory_config(family, kGridGamma, kGridTau, zeta, m, 1000, seed);
  cfg.schedule.mode = ScheduleMode::kTheoryDecay;
  cfg.schedule.c = c;
  const RunTrace trace = run_exact(cfg);
  const std::string base = std::string("reduction/") + family_name(family) +
                           "/zeta=" + (zeta == kGridTau ? "tau" : "0") + "/m=" + m_label(m) +
                           "/seed=" + std::to_string(seed);
  for (int K : {10, 50, 100, 500, 1000}) {
    const CheckResult res = reduction_check(trace, trace.v_star, trace.gamma, K);
    out.checks.push_back(make_check(base + "/K=" + std::to_string(K), res.lhs, res.rhs,
                                    res.holds, 1e-9, seed));
  }
  return out;
}

// ---- rates suite: sub-optimality below the closed-form bound at every K,
// plus the ln(K)/K slope window for exact policy evaluation.
CellResult rates_cell(AlgorithmFamily family, std::uint64_t seed, double c_override) {
  CellResult out;
  const double floor_c = family_c_floor(family, kGridTau, kGridActions, kRateGamma);
  const double c = c_override >= 0.0 ? c_override : floor_c;
  const bool in_hyp = c >= floor_c;
  const std::string base = std::string("rates/") + family_name(family) + "/seed=" +
                           std::to_string(seed);

  for (int m : {kInfiniteSteps, 1}) {
    RunConfig cfg = theory_config(family, kRateGamma, kGridTau, kGridTau, m, 1000, seed);
    cfg.schedule.mode = ScheduleMode::kTheoryDecay;
    cfg.schedule.c = c;
    const RunTrace trace = run_exact(cfg);

    double worst = -std::numeric_limits<double>::infinity();
    std::ostringstream csv;
    for (int K = 1; K <= trace.iterations(); ++K) {
      const double bound =
          subopt_bound(family, K, kGridTau, kGridTau, kGridActions, kRateGamma, c, m);
      worst = std::max(worst, trace.subopt_mixture[K - 1] - bound);
      if (m == kInfiniteSteps)
        csv << "rates," << family_name(family) << ',' << seed << ',' << K << ','
            << trace.subopt_mixture[K - 1] << ',' << bound << '\n';
    }
    out.checks.push_back(make_check(base + "/subopt_le_bound/m=" + m_label(m), worst, 0.0,
                                    worst <= 1e-9, 1e-9, seed, in_hyp));
    if (m == kInfiniteSteps) {
      std::vector<double> xs, ys;
      for (int K = 1; K <= trace.iterations(); ++K) {
        xs.push_back(K);
        ys.push_back(std::max(trace.subopt_mixture[K - 1], 1e-300));
      }
      const RateFit fit = rate_fit(xs, ys, 250.0, 1000.0);
      out.checks.push_back(make_check(base + "/slope_in[-1.3,-0.6]", fit.slope, -0.6,
                                      fit.slope >= -1.3 && fit.slope <= -0.6, 0.0, seed,
                                      in_hyp));
      out.csv = csv.str();
    }
  }
  return out;
}

// ---- decoupling suite: zeta = 0 floor, bound-direction check at K = 2000.
CellResult decoupling_cell(AlgorithmFamily family, std::uint64_t seed) {
  CellResult out;
  const double c = family_c_floor(family, kGridTau, kGridActions, kGridGamma);
  RunConfig cfg = theory_config(family, kGridGamma, kGridTau, 0.0, kInfiniteSteps, 2000, seed);
  cfg.schedule.mode = ScheduleMode::kTheoryDecay;
  cfg.schedule.c = c;
  cfg.store_policies = false;
  cfg.store_q = false;
  const RunTrace trace = run_exact(cfg);
  const int K = trace.iterations();
  const double bound = subopt_bound(family, K, kGridTau, 0.0, kGridActions, kGridGamma, c,
                                    kInfiniteSteps);
  const double lhs = trace.subopt_mixture[K - 1];
  out.checks.push_back(make_check(std::string("decoupling/") + family_name(family) +
                                      "/seed=" + std::to_string(seed) + "/K=2000",
                                  lhs, bound, lhs <= bound + 1e-9, 1e-9, seed));
  return out;
}

// ---- tau0 suite: no actor entropy, constant schedules from the theorems.
CellResult tau0_cell(AlgorithmFamily family, std::uint64_t seed) {
  CellResult out;
  const std::string base = std::string("tau0/") + family_name(family) + "/seed=" +
                           std::to_string(seed);
  std::vector<double> xs, ys;
  std::ostringstream csv;
  for (int K : {100, 400, 1600}) {
    RunConfig cfg = theory_config(family, kTau0Gamma, 0.0, 0.0, kInfiniteSteps, K, seed);
    cfg.schedule.mode = ScheduleMode::kConstant;
    cfg.schedule.eta_const = family == AlgorithmFamily::kNpgRkl
                                 ? constant_eta_npg_tau0(K, kGridActions, kTau0Gamma)
                                 : constant_eta_spma_tau0(K, kGridActions, kTau0Gamma);
    const RunTrace trace = run_exact(cfg);
    const double lhs = trace.subopt_mixture[K - 1];
    const double bound = family == AlgorithmFamily::kNpgRkl
                             ? subopt_bound_npg_tau0(K, kGridActions, kTau0Gamma, kInfiniteSteps)
                             : subopt_bound_spma_tau0(K, kGridActions, kTau0Gamma,
                                                      kInfiniteSteps);
    out.checks.push_back(make_check(base + "/subopt_le_bound/K=" + std::to_string(K), lhs, bound,
                                    lhs <= bound + 1e-9, 1e-9, seed));
    xs.push_back(K);
    ys.push_back(std::max(lhs, 1e-300));
    csv << "tau0," << family_name(family) << ',' << seed << ',' << K << ',' << lhs << ','
        << bound << '\n';
  }
  const RateFit fit = rate_fit(xs, ys, 100.0, 1600.0);
  out.checks.push_back(make_check(base + "/slope_in[-0.7,-0.3]", fit.slope, -0.3,
                                  fit.slope >= -0.7 && fit.slope <= -0.3, 0.0, seed));
  out.csv = csv.str();
  return out;
}

// ---- regret suite: measured per-state regret under the corollary bounds.
CellResult regret_cell(AlgorithmFamily family, std::uint64_t seed, double c_override) {
  CellResult out;
  const double floor_c = family_c_floor(family, kGridTau, kGridActions, kGridGamma);
  const double c = c_override >= 0.0 ? c_override : floor_c;
  const bool in_hyp = c >= floor_c;
  RunConfig cfg = theory_config(family, kGridGamma, kGridTau, kGridTau, 1, 1000, seed);
  cfg.schedule.mode = ScheduleMode::kTheoryDecay;
  cfg.schedule.c = c;
  const RunTrace trace = run_exact(cfg);

  std::vector<double> cum(trace.num_states, 0.0);
  double worst = -std::numeric_limits<double>::infinity();
  for (int K = 1; K <= trace.iterations(); ++K) {
    for (int s = 0; s < trace.num_states; ++s) cum[s] += trace.regret_terms[K - 1][s];
    double measured = 0.0;
    for (double x : cum) measured = std::max(measured, std::abs(x));
    const double bound =
        family == AlgorithmFamily::kNpgRkl
            ? regret_bound_soft_npg(K, kGridTau, kGridActions, kGridGamma, c)
            : regret_bound_soft_spma(K, kGridTau, kGridActions, kGridGamma, c);
    worst = std::max(worst, measured - bound);
  }
  out.checks.push_back(make_check(std::string("regret/") + family_name(family) +
                                      "/seed=" + std::to_string(seed) + "/all_K<=1000",
                                  worst, 0.0, worst <= 1e-9, 1e-9, seed, in_hyp));
  return out;
}

// ---- generic regret: adversarial loss sequences through the KL-proximal
// update, telescoped bound checked for every vertex/uniform comparator.
CellResult generic_regret_cell(std::uint64_t seed) {
  CellResult out;
  RngStream rng(seed, 777);
  int failures = 0;
  double worst_gap = -std::numeric_limits<double>::infinity();
  const int kSequences = 100;
  for (int i = 0; i < kSequences; ++i) {
    const int A = 2 + static_cast<int>(rng.uniform_int(5));
    const int K = 200;
    std::vector<std::vector<double>> d(K, std::vector<double>(A));
    const double scale = rng.uniform(0.1, 1.0);
    for (auto& row : d)
      for (double& x : row) x = rng.uniform(-scale, scale);
    const double taus[] = {0.0, 0.1, 1.0};
    ActorSchedule schedule;
    schedule.tau = taus[rng.uniform_int(3)];
    if (rng.uniform01() < 0.5) {
      schedule.mode = ScheduleMode::kTheoryDecay;
      schedule.c = rng.uniform(0.5, 5.0);
    } else {
      schedule.mode = ScheduleMode::kConstant;
      schedule.eta_const = rng.uniform(0.05, 1.0);
    }
    const CheckResult res = generic_regret_experiment(d, schedule.tau, schedule);
    worst_gap = std::max(worst_gap, res.lhs - res.rhs);
    if (!res.holds) ++failures;
  }
  out.checks.push_back(make_check("generic_regret/adversarial_100", failures, 0.0,
                                  failures == 0, 1e-8, seed));
  out.checks.back().rhs = 0.0;
  out.checks.back().lhs = failures;
  return out;
}

CellResult lemmas_cell(std::uint64_t seed) {
  CellResult out;
  for (const LemmaCheck& lemma : lemma_checks(seed, 1000)) {
    out.checks.push_back(make_check("lemmas/" + lemma.name + "/violations", lemma.violations,
                                    0.0, lemma.violations == 0, 1e-9, seed));
  }
  return out;
}

}  // namespace

int VerifyReport::num_failed() const {
  int n = 0;
  for (const VerifyCheck& c : checks)
    if (c.status == "fail") ++n;
  return n;
}

std::string VerifyReport::to_json() const {
  nlohmann::json doc;
  doc["checks"] = nlohmann::json::array();
  for (const VerifyCheck& c : checks) {
    nlohmann::json item;
    item["name"] = c.name;
    item["lhs"] = c.lhs;
    item["rhs"] = c.rhs;
    item["holds"] = c.holds;
    item["tolerance"] = c.tolerance;
    item["seed"] = c.seed;
    item["status"] = c.status;
    doc["checks"].push_back(std::move(item));
  }
  doc["num_checks"] = checks.size();
  doc["num_failed"] = num_failed();
  return doc.dump(2);
}

VerifyReport verify_theory(const VerifyConfig& cfg, int jobs) {
  const std::vector<std::string> all = {"reduction",      "rates",  "decoupling", "tau0",
                                        "regret", "generic_regret", "lemmas"};
  std::vector<std::string> suites = cfg.suites.empty() ? all : cfg.suites;
  for (const std::string& s : suites)
    if (std::find(all.begin(), all.end(), s) == all.end())
      throw std::invalid_argument("verify_theory: unknown suite '" + s + "'");

  std::vector<std::function<CellResult()>> tasks;
  const AlgorithmFamily methods[] = {AlgorithmFamily::kNpgRkl, AlgorithmFamily::kSpmaRkl};
  for (const std::string& suite : suites) {
    if (suite == "reduction") {
      for (AlgorithmFamily fam : methods)
        for (double zeta : {kGridTau, 0.0})
          for (int m : {1, 5, kInfiniteSteps})
            for (std::uint64_t seed : cfg.seeds)
              tasks.push_back([=] { return reduction_cell(fam, zeta, m, seed); });
    } else if (suite == "rates") {
      for (AlgorithmFamily fam : methods)
        for (std::uint64_t seed : cfg.seeds)
          tasks.push_back([=, c = fam == AlgorithmFamily::kNpgRkl ? cfg.c_npg : cfg.c_spma] {
            return rates_cell(fam, seed, c);
          });
    } else if (suite == "decoupling") {
      for (AlgorithmFamily fam : methods)
        for (std::uint64_t seed : cfg.seeds)
          tasks.push_back([=] { return decoupling_cell(fam, seed); });
    } else if (suite == "tau0") {
      for (AlgorithmFamily fam : methods)
        for (std::uint64_t seed : cfg.seeds)
          tasks.push_back([=] { return tau0_cell(fam, seed); });
    } else if (suite == "regret") {
      for (AlgorithmFamily fam : methods)
        for (std::uint64_t seed : cfg.seeds)
          tasks.push_back([=, c = fam == AlgorithmFamily::kNpgRkl ? cfg.c_npg : cfg.c_spma] {
            return regret_cell(fam, seed, c);
          });
    } else if (suite == "generic_regret") {
      tasks.push_back([seed = cfg.seeds.empty() ? 1 : cfg.seeds.front()] {
        return generic_regret_cell(seed);
      });
    } else if (suite == "lemmas") {
      tasks.push_back([seed = cfg.seeds.empty() ? 1 : cfg.seeds.front()] {
        return lemmas_cell(seed);
      });
    }
  }

  std::vector<CellResult> results(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < tasks.size(); i = next.fetch_add(1)) {
      try {
        results[i] = tasks[i]();
      } catch (const std::exception& e) {
        CellResult res;
        res.checks.push_back(
            make_check(std::string("cell_exception: ") + e.what(), 0.0, 0.0, false, 0.0, 0));
        results[i] = std::move(res);
      }
    }
  };
  const int n_threads = std::max(1, jobs);
  std::vector<std::thread> pool;
  for (int i = 1; i < n_threads; ++i) pool.emplace_back(worker);
  worker();
  for (std::thread& th : pool) th.join();

  VerifyReport report;
  std::ostringstream csv;
  csv << "suite,method,seed,K,value,bound\n";
  for (CellResult& res : results) {
    for (VerifyCheck& c : res.checks) report.checks.push_back(std::move(c));
    csv << res.csv;
  }
  report.rates_csv = csv.str();
  return report;
}

}  // namespace softac
