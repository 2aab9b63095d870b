#pragma once

// Run-directory artifacts written by `wahmvc train`.

#include <filesystem>
#include <string>
#include <vector>

#include "wahmvc/dataset.hpp"
#include "wahmvc/training.hpp"

namespace wahmvc::run_io {

// "epoch,total,hhsw,sem,reg,acc,nmi"; acc/nmi empty without labels.
std::string history_csv(const std::vector<training::EpochRecord>& history);
// "sample_id,label"
std::string labels_csv(const std::vector<int>& labels);

// Resolved config plus the per-epoch direction seeds.
std::string resolved_config_json(const training::TrainConfig& cfg);

// Writes config.json, history.csv, labels.csv, model.wahm and
// embeddings_view{m}.csv (m from 1) into `dir`, creating it if needed.
// Returns the written paths. Throws IoError.
std::vector<std::filesystem::path> write_run_directory(const std::filesystem::path& dir,
                                                       const training::TrainConfig& cfg,
                                                       training::FitResult& result);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace wahmvc::run_io
