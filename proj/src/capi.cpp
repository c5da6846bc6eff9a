#include "softac.h"

#include <cstring>
#include <string>

#include "json.hpp"
#include "softac/config.hpp"
#include "softac/harness.hpp"
#include "softac/verify.hpp"

struct softac_mdp {
  softac::Mdp mdp;
};

struct softac_run_result {
  std::string run_id;
  std::string csv;
  std::string summary;
};

struct softac_report {
  std::string json;
  std::string rates_csv;
  int num_checks = 0;
  int num_failed = 0;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <typename Fn>
softac_status guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    return fn();
  } catch (const softac::StepTooLargeError& e) {
    g_last_error = e.what();
    return SOFTAC_ERR_STEP_TOO_LARGE;
  } catch (const std::invalid_argument& e) {
    g_last_error = e.what();
    return SOFTAC_ERR_INVALID_ARGUMENT;
  } catch (const std::runtime_error& e) {
    g_last_error = e.what();
    const std::string what = e.what();
    if (what.find("did not converge") != std::string::npos ||
        what.find("no convergence") != std::string::npos)
      return SOFTAC_ERR_NO_CONVERGENCE;
    return SOFTAC_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SOFTAC_ERR_INTERNAL;
  }
}

}  // namespace

extern "C" {

const char* softac_last_error(void) { return g_last_error.c_str(); }

void softac_string_free(char* s) { std::free(s); }

softac_status softac_mdp_from_json(const char* json_text, softac_mdp** out) {
  if (!json_text || !out) {
    g_last_error = "null argument";
    return SOFTAC_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] {
    auto handle = new softac_mdp{softac::mdp_from_json(json_text)};
    *out = handle;
    return SOFTAC_OK;
  });
}

softac_status softac_mdp_from_config(const char* config_toml, uint64_t seed, softac_mdp** out) {
  if (!config_toml || !out) {
    g_last_error = "null argument";
    return SOFTAC_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] {
    const softac::TomlDoc doc = softac::TomlDoc::parse(config_toml);
    const softac::EnvSpec spec = softac::parse_env_spec(doc);
    auto handle = new softac_mdp{softac::build_env(spec, seed)};
    *out = handle;
    return SOFTAC_OK;
  });
}

softac_status softac_mdp_to_json(const softac_mdp* mdp, char** json_out) {
  if (!mdp || !json_out) {
    g_last_error = "null argument";
    return SOFTAC_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] {
    *json_out = dup_string(softac::mdp_to_json(mdp->mdp));
    return *json_out ? SOFTAC_OK : SOFTAC_ERR_INTERNAL;
  });
}

int softac_mdp_num_states(const softac_mdp* mdp) { return mdp ? mdp->mdp.num_states : 0; }
int softac_mdp_num_actions(const softac_mdp* mdp) { return mdp ? mdp->mdp.num_actions : 0; }
double softac_mdp_discount(const softac_mdp* mdp) { return mdp ? mdp->mdp.discount : 0.0; }

void softac_mdp_free(softac_mdp* mdp) { delete mdp; }

softac_status softac_solve(const softac_mdp* mdp, double tau, double tol, int max_iterations,
                           char** result_json_out) {
  if (!mdp || !result_json_out) {
    g_last_error = "null argument";
    return SOFTAC_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] {
    auto [pi, v] = softac::optimal_soft_policy(mdp->mdp, tau, tol, max_iterations);
    nlohmann::json doc;
    doc["tau"] = tau;
    doc["J"] = softac::return_J(mdp->mdp, v);
    doc["v"] = v.values;
    nlohmann::json rows = nlohmann::json::array();
    for (int s = 0; s < pi.num_states; ++s) {
      nlohmann::json row = nlohmann::json::array();
      for (int a = 0; a < pi.num_actions; ++a) row.push_back(pi(s, a));
      rows.push_back(std::move(row));
    }
    doc["policy"] = std::move(rows);
    *result_json_out = dup_string(doc.dump(2));
    return *result_json_out ? SOFTAC_OK : SOFTAC_ERR_INTERNAL;
  });
}

softac_status softac_run(const char* config_toml, int64_t seed_override,
                         softac_run_result** out) {
  if (!config_toml || !out) {
    g_last_error = "null argument";
    return SOFTAC_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] {
    softac::RunConfig cfg = softac::parse_run_config(config_toml);
    if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
    const softac::RunTrace trace = softac::run(cfg);
    auto handle = new softac_run_result;
    handle->run_id = trace.run_id;
    handle->csv = softac::trace_to_csv(trace);
    handle->summary = softac::trace_summary_json(trace);
    *out = handle;
    return SOFTAC_OK;
  });
}

const char* softac_result_csv(const softac_run_result* result) {
  return result ? result->csv.c_str() : "";
}
const char* softac_result_summary_json(const softac_run_result* result) {
  return result ? result->summary.c_str() : "";
}
const char* softac_result_run_id(const softac_run_result* result) {
  return result ? result->run_id.c_str() : "";
}

void softac_result_free(softac_run_result* result) { delete result; }

softac_status softac_verify_theory(const char* config_toml, int jobs, softac_report** out) {
  if (!out) {
    g_last_error = "null argument";
    return SOFTAC_ERR_INVALID_ARGUMENT;
  }
  return guarded([&] {
    softac::VerifyConfig cfg;
    if (config_toml && config_toml[0] != '\0')
      cfg = softac::parse_verify_config(config_toml);
    const softac::VerifyReport report = softac::verify_theory(cfg, jobs);
    auto handle = new softac_report;
    handle->json = report.to_json();
    handle->rates_csv = report.rates_csv;
    handle->num_checks = static_cast<int>(report.checks.size());
    handle->num_failed = report.num_failed();
    *out = handle;
    return SOFTAC_OK;
  });
}

const char* softac_report_json(const softac_report* report) {
  return report ? report->json.c_str() : "";
}
const char* softac_report_rates_csv(const softac_report* report) {
  return report ? report->rates_csv.c_str() : "";
}
int softac_report_num_checks(const softac_report* report) {
  return report ? report->num_checks : 0;
}
int softac_report_num_failed(const softac_report* report) {
  return report ? report->num_failed : 0;
}

void softac_report_free(softac_report* report) { delete report; }

}  // extern "C"
