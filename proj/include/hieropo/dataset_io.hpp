#pragma once

#include "hieropo/posterior.hpp"

#include <filesystem>
#include <iosfwd>

namespace hieropo {

// JSON Lines: first line {"m":..,"d":..,"K":..}, then one object per record
// with task_id, action (both 1-based), features, reward.
void write_dataset_jsonl(const LoggedDataset& dataset, std::ostream& out);
LoggedDataset read_dataset_jsonl(std::istream& in, const std::string& source = "<stream>");

// CSV: header task_id,action,reward,f1..fd. An optional leading line
// `# {"m":..,"d":..,"K":..}` fixes the header values; otherwise m and K are
// the largest ids seen.
void write_dataset_csv(const LoggedDataset& dataset, std::ostream& out);
LoggedDataset read_dataset_csv(std::istream& in, const std::string& source = "<stream>");

/// Picks the format from the extension (.csv) and falls back to JSONL.
LoggedDataset read_dataset(const std::filesystem::path& path);
void write_dataset(const LoggedDataset& dataset, const std::filesystem::path& path);

} // namespace hieropo
