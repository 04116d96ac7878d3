#include "core/report.hpp"

#include <filesystem>
#include <fstream>

#include "core/config.hpp"
#include "core/error.hpp"

namespace farkasnet {

std::string epoch_csv(const RunReport& report) {
  std::string out = "epoch,train_loss,train_err,test_err\n";
  for (const auto& e : report.epochs) {
    out += std::to_string(e.epoch) + "," + format_double(e.train_loss) + "," + format_double(e.train_err) + "," +
           format_double(e.test_err) + "\n";
  }
  return out;
}

nlohmann::json audit_json(const std::vector<LayerAudit>& audits) {
  auto arr = nlohmann::json::array();
  for (const auto& a : audits) {
    nlohmann::json j;
    j["entry"] = a.entry;
    j["kind"] = a.kind;
    if (!a.part.empty()) j["part"] = a.part;
    j["farkas"] = a.farkas;
    j["cutoff"] = a.cutoff;
    j["status"] = a.non_finite ? "non_finite" : a.status == lp::Status::Finite ? "finite" : "unbounded";
    if (!a.non_finite && a.status == lp::Status::Finite) {
      j["p_star"] = a.p_star;
    } else {
      j["p_star"] = nullptr;
    }
    j["certificate_valid"] = a.certificate_valid;
    if (a.certificate_valid) j["certified_margin"] = a.certified_margin;
    j["certified"] = a.certified;
    arr.push_back(std::move(j));
  }
  return arr;
}

nlohmann::json run_summary_json(const RunReport& r) {
  nlohmann::json j;
  j["label"] = r.label;
  j["seed"] = r.seed;
  j["epochs"] = r.epochs.size();
  j["initial"] = {{"train_loss", r.initial.train_loss},
                  {"train_err", r.initial.train_err},
                  {"test_err", r.initial.test_err}};
  const EpochMetrics& f = r.final_metrics();
  j["final"] = {{"train_loss", f.train_loss}, {"train_err", f.train_err}, {"test_err", f.test_err}};
  j["born_dead_at_init"] = r.born_dead_at_init;
  if (r.born_dead_at_init) j["dead_layer"] = r.dead_layer;
  j["diverged"] = r.diverged;
  if (r.diverged) j["diverged_epoch"] = r.diverged_epoch;
  j["layers"] = audit_json(r.margins);
  return j;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
  if (!out) throw IoError("write to '" + path + "' failed");
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

void ensure_directory(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
}

}  // namespace farkasnet
