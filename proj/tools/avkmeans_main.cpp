// Command-line surface: pretrain, cluster, evaluate, prep-askubuntu, synth.
// Exit codes: 0 success, 1 usage, 2 data error, 3 numeric failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "avk/avkmeans.hpp"
#include "avk/corpus.hpp"
#include "avk/dataprep.hpp"
#include "avk/embeddings.hpp"
#include "avk/encoders.hpp"
#include "avk/error.hpp"
#include "avk/evaluation.hpp"
#include "avk/pretrain.hpp"
#include "avk/protonet.hpp"
#include "avk/reports.hpp"
#include "avk/rng.hpp"

namespace {

namespace fs = std::filesystem;
using avk::Rng;

constexpr const char* kVersion = "0.1.0";

struct RunConfig {
    std::string corpus;
    std::string embeddings;
    std::string checkpoint;
    std::string out = ".";
    std::string method = "none";  // none | autoencoder | quickthoughts
    std::string arch = "averaging";  // averaging | recurrent
    int k = 10;
    int t = 50;
    int m = 10;
    int dim = 300;
    int hidden = 300;
    int episodes = 100;
    int episode_classes = 10;
    int episode_support = 5;
    int episode_query = 15;
    int epochs = 10;
    int batch_size = 16;
    double lr = 0.001;
    double dev_fraction = 0.1;
    bool shared_embeddings = true;
    std::uint64_t seed = 0;

    // Named seed streams, all derived from the master seed.
    std::uint64_t split_seed() const { return Rng::derive(seed, 1); }
    std::uint64_t embed_seed() const { return Rng::derive(seed, 2); }
    std::uint64_t encoder_seed() const { return Rng::derive(seed, 3); }
    std::uint64_t episode_seed() const { return Rng::derive(seed, 4); }
    std::uint64_t kmeans_seed() const { return Rng::derive(seed, 5); }
};

// --------------------------------------------------------------------------
// Config file: flat key=value lines or a JSON object; flags override.

std::map<std::string, std::string> load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw avk::UsageError("cannot open config file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    std::map<std::string, std::string> out;
    const std::size_t first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            throw avk::UsageError("config file is not a json object: " + path);
        for (const auto& [key, value] : j.items()) {
            if (value.is_string())
                out[key] = value.get<std::string>();
            else
                out[key] = value.dump();
        }
        return out;
    }

    std::istringstream ss(text);
    std::string line;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        const std::size_t begin = line.find_first_not_of(" \t\r");
        if (begin == std::string::npos || line[begin] == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw avk::UsageError("expected key=value at " + path + ":" + std::to_string(line_no));
        auto trim = [](std::string s) {
            const std::size_t b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos) return std::string();
            const std::size_t e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        };
        out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

template <typename T>
void maybe_set(const std::map<std::string, std::string>& cfg, const std::string& key, T& field) {
    const auto it = cfg.find(key);
    if (it == cfg.end()) return;
    std::istringstream ss(it->second);
    T value;
    if constexpr (std::is_same_v<T, std::string>) {
        value = it->second;
    } else if constexpr (std::is_same_v<T, bool>) {
        value = it->second == "true" || it->second == "1";
    } else {
        if (!(ss >> value)) throw avk::UsageError("bad config value for " + key);
    }
    field = value;
}

void apply_config_file(RunConfig& config, const std::map<std::string, std::string>& cfg) {
    maybe_set(cfg, "corpus", config.corpus);
    maybe_set(cfg, "embeddings", config.embeddings);
    maybe_set(cfg, "checkpoint", config.checkpoint);
    maybe_set(cfg, "out", config.out);
    maybe_set(cfg, "method", config.method);
    maybe_set(cfg, "arch", config.arch);
    maybe_set(cfg, "K", config.k);
    maybe_set(cfg, "T", config.t);
    maybe_set(cfg, "M", config.m);
    maybe_set(cfg, "dim", config.dim);
    maybe_set(cfg, "hidden", config.hidden);
    maybe_set(cfg, "episodes", config.episodes);
    maybe_set(cfg, "episode_classes", config.episode_classes);
    maybe_set(cfg, "episode_support", config.episode_support);
    maybe_set(cfg, "episode_query", config.episode_query);
    maybe_set(cfg, "epochs", config.epochs);
    maybe_set(cfg, "batch_size", config.batch_size);
    maybe_set(cfg, "lr", config.lr);
    maybe_set(cfg, "dev_fraction", config.dev_fraction);
    maybe_set(cfg, "shared_embeddings", config.shared_embeddings);
    maybe_set(cfg, "seed", config.seed);
}

// --------------------------------------------------------------------------
// Encoder construction

avk::Arch pretrain_arch(const std::string& arch) {
    if (arch == "averaging") return avk::Arch::kAveraging;
    if (arch == "recurrent") return avk::Arch::kSequence;
    throw avk::UsageError("unknown arch: " + arch + " (expected averaging or recurrent)");
}

std::shared_ptr<avk::EmbeddingTable> make_table(const RunConfig& config, const avk::Corpus& corpus) {
    if (!config.embeddings.empty()) {
        return std::make_shared<avk::EmbeddingTable>(
            avk::load_embeddings(config.embeddings, corpus.vocab, config.embed_seed()));
    }
    return std::make_shared<avk::EmbeddingTable>(
        avk::EmbeddingTable::random(corpus.vocab.size(), config.dim, config.embed_seed()));
}

avk::EncoderConfig encoder_config(const RunConfig& config, avk::Arch arch, std::uint64_t seed) {
    avk::EncoderConfig ec;
    ec.arch = arch;
    ec.proj_dim = config.dim;
    ec.hidden_dim = config.hidden;
    ec.init_seed = seed;
    return ec;
}

struct ViewEncoders {
    avk::Encoder query;
    avk::Encoder content;
};

ViewEncoders make_view_encoders(const RunConfig& config, const avk::Corpus& corpus,
                                const std::optional<avk::Checkpoint>& pretrained) {
    const bool averaging = pretrain_arch(config.arch) == avk::Arch::kAveraging;

    std::shared_ptr<avk::EmbeddingTable> table;
    if (pretrained) {
        if (pretrained->embedding.rows() != corpus.vocab.size())
            throw avk::DataError("checkpoint vocabulary size does not match the corpus");
        table = std::make_shared<avk::EmbeddingTable>(pretrained->embedding.rows(),
                                                      pretrained->embedding.cols());
        table->value = pretrained->embedding;
        table->trainable = pretrained->embedding_trainable;
    } else {
        table = make_table(config, corpus);
    }

    auto content_table = table;
    if (!config.shared_embeddings) {
        content_table = std::make_shared<avk::EmbeddingTable>(*table);
    }

    avk::Encoder query(encoder_config(config, averaging ? avk::Arch::kAveraging : avk::Arch::kSequence,
                                      config.encoder_seed()),
                       table);
    avk::Encoder content(
        encoder_config(config, averaging ? avk::Arch::kAveraging : avk::Arch::kHierarchical,
                       Rng::derive(config.encoder_seed(), 1)),
        content_table);

    if (pretrained) {
        const avk::Encoder source = avk::encoder_from_checkpoint(*pretrained);
        query.copy_parameters_from(source);
        content.copy_parameters_from(source);
    }
    return {std::move(query), std::move(content)};
}

std::optional<avk::Checkpoint> load_pretrained(const RunConfig& config) {
    if (config.method == "none") {
        return std::nullopt;
    }
    if (config.method != "autoencoder" && config.method != "quickthoughts")
        throw avk::UsageError("unknown method: " + config.method);
    if (config.checkpoint.empty())
        throw avk::UsageError("--method " + config.method + " requires --checkpoint");
    avk::Checkpoint ck = avk::load_checkpoint(config.checkpoint);
    if (ck.config.arch != pretrain_arch(config.arch))
        throw avk::DataError("checkpoint architecture (" + avk::to_string(ck.config.arch) +
                             ") does not match --arch " + config.arch);
    return ck;
}

// --------------------------------------------------------------------------
// Subcommands

int cmd_synth(const RunConfig& config, const avk::SyntheticSpec& spec) {
    if (config.out.empty()) throw avk::UsageError("synth requires --out");
    const std::vector<avk::RawInstance> raws = avk::generate_synthetic(spec);
    avk::write_corpus_jsonl(raws, config.out);
    std::cout << "wrote " << raws.size() << " instances to " << config.out << "\n";
    return 0;
}

int cmd_pretrain(const RunConfig& config) {
    if (config.method == "none") throw avk::UsageError("nothing to pretrain: method is none");
    if (config.method != "autoencoder" && config.method != "quickthoughts")
        throw avk::UsageError("unknown method: " + config.method);
    if (config.corpus.empty()) throw avk::UsageError("pretrain requires --corpus");

    const avk::Corpus corpus = avk::load_corpus(config.corpus);
    if (corpus.rejected_empty_query > 0)
        std::cerr << "warning: rejected " << corpus.rejected_empty_query
                  << " instances with empty query view\n";

    auto table = make_table(config, corpus);
    avk::Encoder encoder(
        encoder_config(config, pretrain_arch(config.arch), config.encoder_seed()), table);

    avk::PretrainConfig pc;
    pc.epochs = config.epochs;
    pc.batch_size = config.batch_size;
    pc.lr = config.lr;
    pc.dev_fraction = config.dev_fraction;
    pc.seed = config.split_seed();

    const avk::PretrainLog log = config.method == "autoencoder"
                                     ? avk::pretrain_autoencoder(corpus, encoder, pc)
                                     : avk::pretrain_quickthoughts(corpus, encoder, pc);

    fs::create_directories(config.out);
    const std::string ckpt_path = (fs::path(config.out) / "pretrained.ckpt").string();
    avk::save_checkpoint(ckpt_path, avk::make_checkpoint(encoder));

    std::vector<avk::PretrainLogLine> lines;
    for (std::size_t e = 0; e < log.train_loss.size(); ++e) {
        avk::PretrainLogLine line;
        line.epoch = static_cast<int>(e);
        line.train_loss = log.train_loss[e];
        line.has_dev = e < log.dev_loss.size();
        if (line.has_dev) line.dev_loss = log.dev_loss[e];
        line.best = static_cast<int>(e) == log.best_epoch;
        lines.push_back(line);
    }
    avk::write_pretrain_log_jsonl((fs::path(config.out) / "pretrain_log.jsonl").string(), lines);

    const double best = log.dev_loss.empty() ? log.train_loss[static_cast<std::size_t>(log.best_epoch)]
                                             : log.dev_loss[static_cast<std::size_t>(log.best_epoch)];
    std::cout << "pretrained with " << config.method << ": best epoch " << log.best_epoch
              << ", loss " << best << "\n"
              << "checkpoint: " << ckpt_path << "\n";
    return 0;
}

int cmd_cluster(const RunConfig& config) {
    if (config.corpus.empty()) throw avk::UsageError("cluster requires --corpus");
    const avk::Corpus corpus = avk::load_corpus(config.corpus);
    if (corpus.rejected_empty_query > 0)
        std::cerr << "warning: rejected " << corpus.rejected_empty_query
                  << " instances with empty query view\n";

    const std::optional<avk::Checkpoint> pretrained = load_pretrained(config);
    ViewEncoders encoders = make_view_encoders(config, corpus, pretrained);

    avk::AvkmConfig ac;
    ac.iterations = config.t;
    ac.kmeans_steps = config.m;
    ac.k = config.k;
    ac.episodes.n_episodes = config.episodes;
    ac.episodes.n_classes = config.episode_classes;
    ac.episodes.n_support = config.episode_support;
    ac.episodes.n_query = config.episode_query;
    ac.episodes.lr = config.lr;
    ac.episodes.seed = config.episode_seed();
    ac.kmeans_seed = config.kmeans_seed();

    const avk::AvKmeans runner(corpus, encoders.query, encoders.content, ac);
    const avk::AvkmRunState state = runner.run();

    fs::create_directories(config.out);
    const fs::path out_dir(config.out);
    avk::write_assignment_csv((out_dir / "assignment.csv").string(), corpus, state.z1);
    avk::write_train_log_jsonl((out_dir / "train_log.jsonl").string(), state.history);

    const double final_objective =
        state.history.empty() ? state.initial_objective : state.history.back().kmeans_objective;
    const int final_steps = state.history.empty() ? 0 : state.history.back().kmeans_steps;
    avk::write_kmeans_summary_json((out_dir / "kmeans_summary.json").string(), final_objective,
                                   config.k, final_steps);

    const std::string ck1 = (out_dir / "encoder_view1.ckpt").string();
    const std::string ck2 = (out_dir / "encoder_view2.ckpt").string();
    avk::save_checkpoint(ck1, avk::make_checkpoint(encoders.query));
    avk::save_checkpoint(ck2, avk::make_checkpoint(encoders.content));

    nlohmann::json manifest;
    manifest["version"] = kVersion;
    manifest["config"] = {{"corpus", config.corpus},
                          {"embeddings", config.embeddings},
                          {"checkpoint", config.checkpoint},
                          {"method", config.method},
                          {"arch", config.arch},
                          {"K", config.k},
                          {"T", config.t},
                          {"M", config.m},
                          {"dim", config.dim},
                          {"hidden", config.hidden},
                          {"episodes", config.episodes},
                          {"episode_classes", config.episode_classes},
                          {"episode_support", config.episode_support},
                          {"episode_query", config.episode_query},
                          {"lr", config.lr},
                          {"shared_embeddings", config.shared_embeddings}};
    manifest["seeds"] = {{"master", config.seed},
                         {"split", config.split_seed()},
                         {"embed", config.embed_seed()},
                         {"encoder", config.encoder_seed()},
                         {"episode", config.episode_seed()},
                         {"kmeans", config.kmeans_seed()}};
    manifest["initial_objective"] = state.initial_objective;
    manifest["checkpoints"] = {{"view1", ck1}, {"view2", ck2}};
    manifest["iterations"] = nlohmann::json::array();
    for (const avk::SemiIterationDiag& diag : state.history) {
        manifest["iterations"].push_back({{"iteration", diag.iteration},
                                          {"target_view", diag.target_view},
                                          {"mean_episode_loss", diag.mean_episode_loss},
                                          {"mean_episode_accuracy", diag.mean_episode_accuracy},
                                          {"kmeans_objective", diag.kmeans_objective},
                                          {"kmeans_steps", diag.kmeans_steps},
                                          {"cross_view_agreement", diag.cross_view_agreement}});
    }
    std::ofstream mf(out_dir / "manifest.json", std::ios::binary);
    if (!mf) throw avk::DataError("cannot write manifest");
    mf << manifest.dump(2) << "\n";

    std::cout << "clustered " << corpus.size() << " instances into " << config.k << " clusters\n"
              << "assignment: " << (out_dir / "assignment.csv").string() << "\n";
    return 0;
}

int cmd_evaluate(const RunConfig& config, const std::string& assignment_path) {
    if (config.corpus.empty()) throw avk::UsageError("evaluate requires --corpus");
    if (assignment_path.empty()) throw avk::UsageError("evaluate requires --assignment");

    const avk::Corpus corpus = avk::load_corpus(config.corpus);
    if (!corpus.has_labels()) throw avk::DataError("corpus has no labeled instances");

    std::map<std::string, int> assignment;
    for (const auto& [id, cluster] : avk::read_assignment_csv(assignment_path))
        assignment[id] = cluster;

    std::vector<int> gold;
    std::vector<int> pred;
    std::vector<std::string> missing;
    for (const avk::TwoViewInstance& inst : corpus.instances) {
        if (inst.gold_label < 0) continue;
        const auto it = assignment.find(inst.id);
        if (it == assignment.end()) {
            missing.push_back(inst.id);
            continue;
        }
        gold.push_back(inst.gold_label);
        pred.push_back(it->second);
    }
    if (!missing.empty()) {
        std::string ids;
        for (std::size_t i = 0; i < missing.size() && i < 10; ++i)
            ids += (i ? ", " : "") + missing[i];
        if (missing.size() > 10) ids += ", ...";
        throw avk::DataError("labeled instances missing from assignment: " + ids);
    }

    const avk::ClusterMetrics metrics = avk::evaluate_clustering(gold, pred);
    const std::string report = avk::metrics_report_json(metrics);
    if (!config.out.empty() && config.out != "-") {
        std::ofstream out(config.out, std::ios::binary);
        if (!out) throw avk::DataError("cannot write metrics file: " + config.out);
        out << report << "\n";
    }
    std::cout << report << "\n";
    return 0;
}

int cmd_prep_askubuntu(const std::string& pairs_path, const std::string& questions_path,
                       int top_k, bool require_answer, const std::string& out_path) {
    const avk::DuplicateGraph graph = avk::read_duplicate_pairs_csv(pairs_path);
    const std::vector<avk::QuestionRecord> questions = avk::read_questions_jsonl(questions_path);

    avk::QuestionClusterSummary summary;
    const std::vector<avk::RawInstance> instances =
        avk::build_question_clusters(graph, questions, top_k, require_answer, &summary);
    avk::write_corpus_jsonl(instances, out_path);

    nlohmann::json j;
    j["n_pairs"] = summary.n_pairs;
    j["n_questions_in_pairs"] = summary.n_questions;
    j["n_components"] = summary.n_components;
    j["top_k"] = top_k;
    j["largest_cluster"] = summary.largest_selected;
    j["smallest_cluster"] = summary.smallest_selected;
    j["n_selected_questions"] = summary.n_selected_questions;
    std::cout << j.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"alternating-view k-means for dialog intent induction"};
    app.require_subcommand(1);

    RunConfig config;
    std::string config_path;
    std::string assignment_path;
    std::string pairs_path;
    std::string questions_path;
    int top_k = 20;
    bool no_answer_filter = false;
    avk::SyntheticSpec spec;

    // Pre-pass: apply the config file so explicit flags can override it.
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--config") {
            try {
                apply_config_file(config, load_config_file(argv[i + 1]));
            } catch (const avk::UsageError& e) {
                std::cerr << "error: " << e.what() << "\n";
                return 1;
            }
        }
    }

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "config file (key=value or json)");
        cmd->add_option("--corpus", config.corpus, "corpus jsonl path");
        cmd->add_option("--embeddings", config.embeddings, "pretrained word vectors (text)");
        cmd->add_option("--method", config.method, "none | autoencoder | quickthoughts");
        cmd->add_option("--arch", config.arch, "averaging | recurrent");
        cmd->add_option("--K", config.k, "number of clusters");
        cmd->add_option("--T", config.t, "outer iterations");
        cmd->add_option("--M", config.m, "k-means steps per semi-iteration");
        cmd->add_option("--seed", config.seed, "master seed");
        cmd->add_option("--out", config.out, "output path or directory");
        cmd->add_option("--dim", config.dim, "embedding/projection dimension");
        cmd->add_option("--hidden", config.hidden, "recurrent hidden size per direction");
        cmd->add_option("--lr", config.lr, "learning rate");
    };

    CLI::App* pretrain = app.add_subcommand("pretrain", "unsupervised encoder pretraining");
    add_common(pretrain);
    pretrain->add_option("--epochs", config.epochs, "max epochs");
    pretrain->add_option("--batch-size", config.batch_size, "batch size");
    pretrain->add_option("--dev-fraction", config.dev_fraction, "dev split fraction");

    CLI::App* cluster = app.add_subcommand("cluster", "run alternating-view k-means");
    add_common(cluster);
    cluster->add_option("--checkpoint", config.checkpoint, "pretrained encoder checkpoint");
    cluster->add_option("--episodes", config.episodes, "episodes per semi-iteration");
    cluster->add_option("--episode-classes", config.episode_classes, "classes per episode");
    cluster->add_option("--episode-support", config.episode_support, "support points per class");
    cluster->add_option("--episode-query", config.episode_query, "query points per class");
    cluster->add_flag("!--no-shared-embeddings", config.shared_embeddings,
                      "give each view its own embedding table");

    CLI::App* evaluate = app.add_subcommand("evaluate", "score an assignment against gold labels");
    add_common(evaluate);
    evaluate->add_option("--assignment", assignment_path, "assignment csv path");

    CLI::App* prep = app.add_subcommand("prep-askubuntu", "build question intent clusters");
    prep->add_option("--pairs", pairs_path, "duplicate pairs csv (qid1,qid2)")->required();
    prep->add_option("--questions", questions_path, "questions jsonl")->required();
    prep->add_option("--top-k", top_k, "number of largest clusters to keep");
    prep->add_flag("--keep-unanswered", no_answer_filter, "do not filter unanswered questions");
    prep->add_option("--out", config.out, "output corpus jsonl")->required();

    CLI::App* synth = app.add_subcommand("synth", "generate a planted-cluster corpus");
    add_common(synth);
    synth->add_option("--n", spec.n, "number of instances");
    synth->add_option("--query-noise", spec.query_noise, "query-view noise rate");
    synth->add_option("--content-noise", spec.content_noise, "content-view noise rate");
    synth->add_option("--query-vocab", spec.query_vocab_per_cluster, "query tokens per cluster");
    synth->add_option("--content-vocab", spec.content_vocab_per_cluster,
                      "content tokens per cluster");
    synth->add_option("--noise-vocab", spec.noise_vocab, "shared noise vocabulary size");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (pretrain->parsed()) return cmd_pretrain(config);
        if (cluster->parsed()) return cmd_cluster(config);
        if (evaluate->parsed()) return cmd_evaluate(config, assignment_path);
        if (prep->parsed())
            return cmd_prep_askubuntu(pairs_path, questions_path, top_k, !no_answer_filter,
                                      config.out);
        if (synth->parsed()) {
            spec.k = config.k;
            spec.seed = config.seed;
            return cmd_synth(config, spec);
        }
    } catch (const avk::UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const avk::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const avk::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
