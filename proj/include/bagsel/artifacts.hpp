#pragma once

#include <filesystem>
#include <string>

#include "bagsel/ensemble.hpp"
#include "bagsel/metrics.hpp"
#include "json.hpp"

namespace bagsel {

/// JSON blocks shared by reports and the python bindings.
nlohmann::json class_stats_to_json(const ClassStats& s);
nlohmann::json class_report_to_json(const ClassReport& r);
nlohmann::json confusion_to_json(const ConfusionMatrix& m, const std::string& rows_are);
nlohmann::json averaged_gini_to_json(const AveragedGini& g);

/// CSV dumps. Every file starts with a `# config_hash=<hex>` comment line.
std::string roc_points_csv(const RocCurve& curve, const std::string& config_hash);
std::string ranked_table_csv(const std::vector<EnsembleEvaluation>& ranked,
                             const std::string& config_hash);

}  // namespace bagsel
