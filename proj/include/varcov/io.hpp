#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "varcov/linalg.hpp"
#include "varcov/var.hpp"

namespace varcov::io {

inline constexpr int kModelFormatVersion = 1;

/// Rows are time points, columns are series. The header row is optional and
/// detected by the presence of a non-numeric cell.
struct Dataset {
    std::vector<std::string> names;
    Matrix values;
};

Dataset parse_dataset_csv(std::string_view text);
Dataset read_dataset_csv(const std::filesystem::path& path);
std::string format_dataset_csv(const Dataset& data);

/// Names y1..yK.
std::vector<std::string> default_names(Index k);

/// Decimal text with 17 significant digits, which round-trips every double.
std::string format_double(double v);

/// One "lag,row,col" triple per line, all 1-indexed; '#' starts a comment.
std::vector<LagPosition> parse_constraints(std::string_view text);
std::vector<LagPosition> read_constraints(const std::filesystem::path& path);

nlohmann::json model_to_json(const VarModel& model, const std::vector<std::string>& names = {});
VarModel model_from_json(const nlohmann::json& j, std::vector<std::string>* names = nullptr);

void save_model(const std::filesystem::path& path, const VarModel& model, const std::vector<std::string>& names = {});
VarModel load_model(const std::filesystem::path& path, std::vector<std::string>* names = nullptr);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace varcov::io
