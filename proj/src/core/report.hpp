#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "core/audit.hpp"
#include "core/trainer.hpp"

namespace farkasnet {

// "epoch,train_loss,train_err,test_err" then one row per epoch. Numbers use
// the shortest round-trip decimal form. Wall-clock time is never written.
std::string epoch_csv(const RunReport& report);

nlohmann::json audit_json(const std::vector<LayerAudit>& audits);
nlohmann::json run_summary_json(const RunReport& report);

void write_text_file(const std::string& path, const std::string& text);
std::string join_path(const std::string& dir, const std::string& name);
// Creates the directory (and parents) if needed.
void ensure_directory(const std::string& dir);

}  // namespace farkasnet
