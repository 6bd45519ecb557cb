#include "avk/reports.hpp"

#include <fstream>

#include <json.hpp>

#include "avk/error.hpp"

namespace avk {

void write_assignment_csv(const std::string& path, const Corpus& corpus,
                          const std::vector<int>& assignment) {
    if (assignment.size() != static_cast<std::size_t>(corpus.size()))
        throw UsageError("assignment length does not match corpus");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write assignment file: " + path);
    out << "instance_id,cluster\n";
    for (int i = 0; i < corpus.size(); ++i) {
        out << corpus.instances[static_cast<std::size_t>(i)].id << ","
            << assignment[static_cast<std::size_t>(i)] << "\n";
    }
}

std::vector<std::pair<std::string, int>> read_assignment_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open assignment file: " + path);
    std::vector<std::pair<std::string, int>> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1 && line == "instance_id,cluster") continue;
        const std::size_t comma = line.rfind(',');
        if (comma == std::string::npos)
            throw DataError("bad assignment row at " + path + ":" + std::to_string(line_no));
        try {
            rows.emplace_back(line.substr(0, comma), std::stoi(line.substr(comma + 1)));
        } catch (const std::exception&) {
            throw DataError("bad cluster id at " + path + ":" + std::to_string(line_no));
        }
    }
    return rows;
}

void write_kmeans_summary_json(const std::string& path, double objective, int k, int iterations) {
    nlohmann::json j;
    j["objective"] = objective;
    j["K"] = k;
    j["iterations"] = iterations;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write summary file: " + path);
    out << j.dump(2) << "\n";
}

void write_train_log_jsonl(const std::string& path,
                           const std::vector<SemiIterationDiag>& history) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write training log: " + path);
    for (std::size_t s = 0; s < history.size(); ++s) {
        for (std::size_t e = 0; e < history[s].episode_losses.size(); ++e) {
            nlohmann::json j;
            j["semi_iteration"] = s + 1;
            j["episode"] = e;
            j["loss"] = history[s].episode_losses[e];
            out << j.dump() << "\n";
        }
    }
}

void write_pretrain_log_jsonl(const std::string& path,
                              const std::vector<PretrainLogLine>& lines) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write pretrain log: " + path);
    for (const PretrainLogLine& line : lines) {
        nlohmann::json j;
        j["epoch"] = line.epoch;
        j["train_loss"] = line.train_loss;
        if (line.has_dev) j["dev_loss"] = line.dev_loss;
        j["best"] = line.best;
        out << j.dump() << "\n";
    }
}

}  // namespace avk
