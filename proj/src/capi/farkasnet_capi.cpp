#include "farkasnet/farkasnet.h"

#include <cstring>
#include <limits>
#include <memory>
#include <new>
#include <string>
#include <vector>

#include "core/audit.hpp"
#include "core/commands.hpp"
#include "core/config.hpp"
#include "core/error.hpp"
#include "core/experiments.hpp"
#include "core/lp.hpp"
#include "core/weights_io.hpp"

struct fk_config {
  farkasnet::Config cfg;
};

struct fk_run_result {
  farkasnet::CommandResult result;
};

struct fk_network {
  farkasnet::Network net;
};

struct fk_verify_report {
  std::vector<farkasnet::LayerAudit> audits;
};

namespace {

thread_local std::string g_last_error;

fk_status fail(fk_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <class F>
fk_status guarded(F&& f) {
  g_last_error.clear();
  try {
    return f();
  } catch (const farkasnet::DimensionError& e) {
    return fail(FK_ERR_DIMENSION, e.what());
  } catch (const farkasnet::InputError& e) {
    return fail(FK_ERR_INPUT, e.what());
  } catch (const farkasnet::UsageError& e) {
    return fail(FK_ERR_USAGE, e.what());
  } catch (const farkasnet::SpecError& e) {
    return fail(FK_ERR_SPEC, e.what());
  } catch (const farkasnet::FormatError& e) {
    return fail(FK_ERR_FORMAT, e.what());
  } catch (const farkasnet::IoError& e) {
    return fail(FK_ERR_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(FK_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(FK_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(FK_ERR_INTERNAL, "unknown failure");
  }
}

#define FK_REQUIRE(ptr)                                               \
  do {                                                                \
    if (!(ptr)) return fail(FK_ERR_NULL, #ptr " must not be NULL"); \
  } while (0)

farkasnet::lp::Problem make_problem(const double* w, std::size_t m, std::size_t n, const double* b) {
  if (m == 0 || n == 0) throw farkasnet::DimensionError("LP needs m >= 1 rows and n >= 1 columns");
  farkasnet::lp::Problem p{farkasnet::Tensor({m, n}, std::vector<double>(w, w + m * n)),
                           std::vector<double>(b, b + m)};
  farkasnet::lp::validate(p);
  return p;
}

void copy_text(char* dst, std::size_t cap, const std::string& src) {
  const std::size_t n = std::min(cap - 1, src.size());
  std::memcpy(dst, src.data(), n);
  dst[n] = '\0';
}

}  // namespace

extern "C" {

const char* fk_last_error(void) { return g_last_error.c_str(); }

const char* fk_status_name(fk_status status) {
  switch (status) {
    case FK_OK:
      return "ok";
    case FK_ERR_DIMENSION:
      return "dimension error";
    case FK_ERR_INPUT:
      return "input error";
    case FK_ERR_USAGE:
      return "usage error";
    case FK_ERR_SPEC:
      return "spec error";
    case FK_ERR_FORMAT:
      return "format error";
    case FK_ERR_IO:
      return "io error";
    case FK_ERR_NULL:
      return "null argument";
    case FK_ERR_BUFFER:
      return "buffer too small";
    case FK_ERR_INTERNAL:
      return "internal error";
  }
  return "unknown status";
}

const char* fk_version(void) { return "1.0.0"; }

// ---- configuration ---------------------------------------------------------

fk_status fk_config_create(fk_config** out) {
  FK_REQUIRE(out);
  *out = nullptr;
  return guarded([&] {
    *out = new fk_config{};
    return FK_OK;
  });
}

fk_status fk_config_load(const char* path, fk_config** out) {
  FK_REQUIRE(path);
  FK_REQUIRE(out);
  *out = nullptr;
  return guarded([&] {
    auto c = std::make_unique<fk_config>(fk_config{farkasnet::Config::load(path)});
    *out = c.release();
    return FK_OK;
  });
}

fk_status fk_config_set(fk_config* cfg, const char* key, const char* value) {
  FK_REQUIRE(cfg);
  FK_REQUIRE(key);
  FK_REQUIRE(value);
  return guarded([&] {
    if (*key == '\0') throw farkasnet::UsageError("empty config key");
    cfg->cfg.set(key, value);
    return FK_OK;
  });
}

fk_status fk_config_set_assignment(fk_config* cfg, const char* assignment) {
  FK_REQUIRE(cfg);
  FK_REQUIRE(assignment);
  return guarded([&] {
    cfg->cfg.set_assignment(assignment);
    return FK_OK;
  });
}

fk_status fk_config_text(const fk_config* cfg, char* buf, size_t cap, size_t* needed) {
  FK_REQUIRE(cfg);
  return guarded([&] {
    const std::string text = cfg->cfg.to_text();
    if (needed) *needed = text.size() + 1;
    if (!buf || cap < text.size() + 1) {
      return fail(FK_ERR_BUFFER, "config text needs " + std::to_string(text.size() + 1) + " bytes");
    }
    copy_text(buf, cap, text);
    return FK_OK;
  });
}

void fk_config_destroy(fk_config* cfg) { delete cfg; }

// ---- commands ---------------------------------------------------------------

fk_status fk_run(const char* command, fk_config* cfg, const char* out_dir, fk_run_result** out) {
  FK_REQUIRE(command);
  FK_REQUIRE(cfg);
  FK_REQUIRE(out);
  *out = nullptr;
  return guarded([&] {
    auto r = std::make_unique<fk_run_result>();
    r->result = farkasnet::run_command(command, cfg->cfg, out_dir ? out_dir : "");
    *out = r.release();
    return FK_OK;
  });
}

size_t fk_run_violations(const fk_run_result* result) { return result ? result->result.violations : 0; }

const char* fk_run_summary(const fk_run_result* result) { return result ? result->result.summary.c_str() : ""; }

size_t fk_run_file_count(const fk_run_result* result) { return result ? result->result.files.size() : 0; }

const char* fk_run_file(const fk_run_result* result, size_t index) {
  if (!result || index >= result->result.files.size()) return nullptr;
  return result->result.files[index].c_str();
}

void fk_run_result_destroy(fk_run_result* result) { delete result; }

// ---- networks ---------------------------------------------------------------

fk_status fk_network_build_mlp(const char* variant, size_t input_dim, size_t width, size_t depth, size_t classes,
                               const char* aggregation, const char* init, uint64_t seed, fk_network** out) {
  FK_REQUIRE(variant);
  FK_REQUIRE(out);
  *out = nullptr;
  return guarded([&] {
    farkasnet::FarkasOptions options;
    if (aggregation) options.aggregation = farkasnet::parse_aggregation(aggregation);
    farkasnet::InitScheme scheme;
    if (init) {
      scheme.kind = farkasnet::parse_init_kind(init);
      if (scheme.kind == farkasnet::InitKind::AsymmetricPositiveBias) {
        throw farkasnet::UsageError("asymmetric_positive_bias needs parameters; build it from a config");
      }
    }
    if (input_dim == 0) throw farkasnet::SpecError("input dimension must be positive");
    auto n = std::make_unique<fk_network>();
    n->net = farkasnet::Network::build(farkasnet::mlp_spec(farkasnet::parse_variant(variant), input_dim, width,
                                                           depth, classes, scheme, options, seed));
    *out = n.release();
    return FK_OK;
  });
}

fk_status fk_network_load(const char* path, fk_network** out) {
  FK_REQUIRE(path);
  FK_REQUIRE(out);
  *out = nullptr;
  return guarded([&] {
    auto n = std::make_unique<fk_network>();
    n->net = farkasnet::load_weights(path).network;
    *out = n.release();
    return FK_OK;
  });
}

fk_status fk_network_save(const fk_network* net, const char* path) {
  FK_REQUIRE(net);
  FK_REQUIRE(path);
  return guarded([&] {
    farkasnet::save_weights(net->net, path);
    return FK_OK;
  });
}

void fk_network_destroy(fk_network* net) { delete net; }

fk_status fk_network_input_dim(const fk_network* net, size_t* out) {
  FK_REQUIRE(net);
  FK_REQUIRE(out);
  return guarded([&] {
    const auto d = net->net.input_dim();
    if (!d) throw farkasnet::UsageError("network has no weight layers");
    *out = *d;
    return FK_OK;
  });
}

fk_status fk_network_output_dim(const fk_network* net, size_t* out) {
  FK_REQUIRE(net);
  FK_REQUIRE(out);
  return guarded([&] {
    const auto d = net->net.output_dim();
    if (!d) throw farkasnet::UsageError("network has no weight layers");
    *out = *d;
    return FK_OK;
  });
}

fk_status fk_network_layer_count(const fk_network* net, size_t* out) {
  FK_REQUIRE(net);
  FK_REQUIRE(out);
  *out = net->net.layers().size();
  return FK_OK;
}

fk_status fk_network_parameter_count(const fk_network* net, size_t* out) {
  FK_REQUIRE(net);
  FK_REQUIRE(out);
  *out = net->net.parameter_count();
  return FK_OK;
}

fk_status fk_network_forward(fk_network* net, const double* x, size_t rows, size_t cols, double* out,
                             size_t out_cap) {
  FK_REQUIRE(net);
  FK_REQUIRE(x);
  FK_REQUIRE(out);
  return guarded([&] {
    if (rows == 0 || cols == 0) throw farkasnet::DimensionError("forward needs a non-empty batch");
    const auto od = net->net.output_dim();
    if (!od) throw farkasnet::UsageError("network has no weight layers");
    if (out_cap < rows * *od) {
      return fail(FK_ERR_BUFFER, "forward output needs " + std::to_string(rows * *od) + " doubles");
    }
    farkasnet::Tensor input({rows, cols}, std::vector<double>(x, x + rows * cols));
    const farkasnet::Tensor y = net->net.predict(input);
    std::copy(y.data().begin(), y.data().end(), out);
    return FK_OK;
  });
}

// ---- verification -----------------------------------------------------------

fk_status fk_verify_network(const fk_network* net, fk_verify_report** out) {
  FK_REQUIRE(net);
  FK_REQUIRE(out);
  *out = nullptr;
  return guarded([&] {
    auto r = std::make_unique<fk_verify_report>();
    r->audits = farkasnet::audit_network(net->net);
    *out = r.release();
    return FK_OK;
  });
}

size_t fk_verify_layer_count(const fk_verify_report* report) { return report ? report->audits.size() : 0; }

fk_status fk_verify_layer(const fk_verify_report* report, size_t index, fk_layer_audit* out) {
  FK_REQUIRE(report);
  FK_REQUIRE(out);
  if (index >= report->audits.size()) {
    return fail(FK_ERR_USAGE, "audit index " + std::to_string(index) + " out of range");
  }
  const auto& a = report->audits[index];
  *out = fk_layer_audit{};
  out->entry = a.entry;
  copy_text(out->kind, sizeof out->kind, a.kind);
  copy_text(out->part, sizeof out->part, a.part);
  out->farkas = a.farkas ? 1 : 0;
  out->finite = a.status == farkasnet::lp::Status::Finite ? 1 : 0;
  out->cutoff = a.cutoff;
  out->p_star = a.p_star;
  out->certificate_valid = a.certificate_valid ? 1 : 0;
  out->certified_margin = a.certified_margin;
  out->certified = a.certified ? 1 : 0;
  return FK_OK;
}

int fk_verify_all_certified(const fk_verify_report* report) {
  return report && farkasnet::all_certified(report->audits) ? 1 : 0;
}

void fk_verify_report_destroy(fk_verify_report* report) { delete report; }

// ---- LP primitives ----------------------------------------------------------

fk_status fk_lp_min_max_margin(const double* w, size_t m, size_t n, const double* b, fk_lp_result* out,
                               double* argmin, double* certificate) {
  FK_REQUIRE(w);
  FK_REQUIRE(b);
  FK_REQUIRE(out);
  return guarded([&] {
    const auto p = make_problem(w, m, n, b);
    const auto r = farkasnet::lp::min_max_margin(p);
    out->finite = r.status == farkasnet::lp::Status::Finite ? 1 : 0;
    out->p_star = out->finite ? r.optimum : -std::numeric_limits<double>::infinity();
    out->has_certificate = r.certificate ? 1 : 0;
    if (argmin && out->finite) std::copy(r.argmin.begin(), r.argmin.end(), argmin);
    if (certificate && r.certificate) std::copy(r.certificate->begin(), r.certificate->end(), certificate);
    return FK_OK;
  });
}

fk_status fk_lp_dual_value(const double* lambda, const double* w, size_t m, size_t n, const double* b,
                           double* out) {
  FK_REQUIRE(lambda);
  FK_REQUIRE(w);
  FK_REQUIRE(b);
  FK_REQUIRE(out);
  return guarded([&] {
    const auto p = make_problem(w, m, n, b);
    *out = farkasnet::lp::dual_value(std::span<const double>(lambda, m), p);
    return FK_OK;
  });
}

fk_status fk_lp_check_certificate(const double* lambda, const double* w, size_t m, size_t n, const double* b,
                                  int* out) {
  FK_REQUIRE(lambda);
  FK_REQUIRE(w);
  FK_REQUIRE(b);
  FK_REQUIRE(out);
  return guarded([&] {
    const auto p = make_problem(w, m, n, b);
    *out = farkasnet::lp::check_certificate(std::span<const double>(lambda, m), p) ? 1 : 0;
    return FK_OK;
  });
}

fk_status fk_farkas_lambda(size_t m, const char* aggregation, double* out) {
  FK_REQUIRE(aggregation);
  FK_REQUIRE(out);
  return guarded([&] {
    const auto lambda = farkasnet::certificate_lambda(m, farkasnet::parse_aggregation(aggregation));
    std::copy(lambda.begin(), lambda.end(), out);
    return FK_OK;
  });
}

}  // extern "C"
