#pragma once

#include <string>
#include <vector>

#include "avk/avkmeans.hpp"
#include "avk/corpus.hpp"
#include "avk/kmeans.hpp"

namespace avk {

/// "instance_id,cluster" with a header row.
void write_assignment_csv(const std::string& path, const Corpus& corpus,
                          const std::vector<int>& assignment);

/// id -> cluster, parsed back from the CSV.
std::vector<std::pair<std::string, int>> read_assignment_csv(const std::string& path);

void write_kmeans_summary_json(const std::string& path, double objective, int k, int iterations);

/// Training log, one JSONL line per episode: {semi_iteration, episode, loss}.
void write_train_log_jsonl(const std::string& path, const std::vector<SemiIterationDiag>& history);

struct PretrainLogLine {
    int epoch = 0;
    double train_loss = 0.0;
    double dev_loss = 0.0;
    bool has_dev = false;
    bool best = false;
};

void write_pretrain_log_jsonl(const std::string& path, const std::vector<PretrainLogLine>& lines);

}  // namespace avk
