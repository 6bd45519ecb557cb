#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "avk/avkmeans.hpp"
#include "avk/corpus.hpp"
#include "avk/dataprep.hpp"
#include "avk/embeddings.hpp"
#include "avk/encoders.hpp"
#include "avk/error.hpp"
#include "avk/evaluation.hpp"
#include "avk/kmeans.hpp"
#include "avk/protonet.hpp"
#include "avk/rng.hpp"

namespace py = pybind11;

namespace {

py::dict kmeans_py(const Eigen::MatrixXd& points, int k, std::optional<int> max_steps,
                   std::optional<std::vector<int>> init, std::uint64_t seed) {
    avk::KmeansOptions options;
    options.k = k;
    options.max_steps = max_steps;
    options.init = std::move(init);
    options.seed = seed;
    const avk::ClusterState state = avk::kmeans(points, options);
    py::dict out;
    out["assignment"] = state.assignment;
    out["centroids"] = state.centroids;
    out["objective"] = state.objective;
    out["iterations"] = state.iterations;
    return out;
}

py::dict metrics_py(const std::vector<int>& gold, const std::vector<int>& pred) {
    const avk::ClusterMetrics m = avk::evaluate_clustering(gold, pred);
    py::dict out;
    out["precision"] = m.precision;
    out["recall"] = m.recall;
    out["f1"] = m.f1;
    out["acc"] = m.acc;
    out["n_labeled"] = m.n_labeled;
    out["K_gold"] = m.k_gold;
    out["K_pred"] = m.k_pred;
    py::list confusions;
    for (const avk::ConfusionEntry& e : m.top_confusions) {
        py::dict d;
        d["gold"] = e.gold;
        d["pred"] = e.pred;
        d["count"] = e.count;
        confusions.append(d);
    }
    out["top_confusions"] = confusions;
    return out;
}

py::list synthetic_py(int n, int k, double query_noise, double content_noise,
                      std::uint64_t seed) {
    avk::SyntheticSpec spec;
    spec.n = n;
    spec.k = k;
    spec.query_noise = query_noise;
    spec.content_noise = content_noise;
    spec.seed = seed;
    py::list out;
    for (const avk::RawInstance& raw : avk::generate_synthetic(spec)) {
        py::dict d;
        d["id"] = raw.id;
        d["view1"] = raw.view1;
        d["view2"] = raw.view2;
        if (raw.label) d["label"] = *raw.label;
        out.append(d);
    }
    return out;
}

void write_corpus_py(const py::list& instances, const std::string& path) {
    std::vector<avk::RawInstance> raws;
    for (const auto& item : instances) {
        const py::dict d = item.cast<py::dict>();
        avk::RawInstance raw;
        raw.id = d["id"].cast<std::string>();
        raw.view1 = d["view1"].cast<std::string>();
        raw.view2 = d["view2"].cast<std::vector<std::string>>();
        if (d.contains("label")) raw.label = d["label"].cast<std::string>();
        raws.push_back(std::move(raw));
    }
    avk::write_corpus_jsonl(raws, path);
}

py::dict run_avkmeans_py(const std::string& corpus_path, int k, int iterations, int kmeans_steps,
                         int dim, const std::string& arch, double lr, std::uint64_t seed) {
    const avk::Corpus corpus = avk::load_corpus(corpus_path);
    const auto parsed = arch == "recurrent" ? avk::Arch::kSequence : avk::arch_from_string(arch).value_or(avk::Arch::kAveraging);

    auto table = std::make_shared<avk::EmbeddingTable>(
        avk::EmbeddingTable::random(corpus.vocab.size(), dim, avk::Rng::derive(seed, 2)));

    avk::EncoderConfig qc;
    qc.arch = parsed == avk::Arch::kAveraging ? avk::Arch::kAveraging : avk::Arch::kSequence;
    qc.proj_dim = dim;
    qc.hidden_dim = dim;
    qc.init_seed = avk::Rng::derive(seed, 3);
    avk::EncoderConfig cc = qc;
    cc.arch = parsed == avk::Arch::kAveraging ? avk::Arch::kAveraging : avk::Arch::kHierarchical;
    cc.init_seed = avk::Rng::derive(seed, 31);

    avk::Encoder query(qc, table);
    avk::Encoder content(cc, table);

    avk::AvkmConfig config;
    config.k = k;
    config.iterations = iterations;
    config.kmeans_steps = kmeans_steps;
    config.episodes.lr = lr;
    config.episodes.seed = avk::Rng::derive(seed, 4);
    config.kmeans_seed = avk::Rng::derive(seed, 5);

    const avk::AvKmeans runner(corpus, query, content, config);
    const avk::AvkmRunState state = runner.run();

    py::dict out;
    py::list ids;
    py::list gold;
    for (const avk::TwoViewInstance& inst : corpus.instances) {
        ids.append(inst.id);
        gold.append(inst.gold_label);
    }
    out["ids"] = ids;
    out["gold"] = gold;
    out["assignment"] = state.z1;
    out["initial_objective"] = state.initial_objective;
    py::list diags;
    for (const avk::SemiIterationDiag& diag : state.history) {
        py::dict d;
        d["iteration"] = diag.iteration;
        d["target_view"] = diag.target_view;
        d["mean_episode_loss"] = diag.mean_episode_loss;
        d["kmeans_objective"] = diag.kmeans_objective;
        d["cross_view_agreement"] = diag.cross_view_agreement;
        diags.append(d);
    }
    out["diagnostics"] = diags;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "alternating-view k-means core";
    m.attr("__version__") = "0.1.0";

    py::register_exception<avk::UsageError>(m, "AvkUsageError", PyExc_ValueError);
    py::register_exception<avk::DataError>(m, "AvkDataError", PyExc_ValueError);
    py::register_exception<avk::NumericError>(m, "AvkNumericError", PyExc_ArithmeticError);

    m.def("kmeans", &kmeans_py, py::arg("points"), py::arg("k"), py::arg("max_steps") = py::none(),
          py::arg("init") = py::none(), py::arg("seed") = 0,
          "Lloyd k-means with optional warm start and step bound");

    m.def(
        "hungarian",
        [](const Eigen::MatrixXd& profit) {
            const avk::HungarianResult r = avk::hungarian_max(profit);
            return py::make_tuple(r.row_to_col, r.total);
        },
        py::arg("profit"), "maximum-profit one-to-one assignment");

    m.def(
        "cluster_prf",
        [](const std::vector<int>& gold, const std::vector<int>& pred) {
            const avk::Prf prf = avk::cluster_prf(gold, pred);
            return py::make_tuple(prf.precision, prf.recall, prf.f1);
        },
        py::arg("gold"), py::arg("pred"));

    m.def(
        "cluster_acc",
        [](const std::vector<int>& gold, const std::vector<int>& pred) {
            const avk::AccResult acc = avk::cluster_acc(gold, pred);
            return py::make_tuple(acc.acc, acc.pred_to_gold);
        },
        py::arg("gold"), py::arg("pred"));

    m.def("evaluate_clustering", &metrics_py, py::arg("gold"), py::arg("pred"));

    m.def(
        "class_distribution",
        [](const Eigen::VectorXd& query, const Eigen::MatrixXd& prototypes) {
            return avk::class_distribution(query, prototypes);
        },
        py::arg("query"), py::arg("prototypes"),
        "softmax over negative squared distances to the prototypes");

    m.def("generate_synthetic", &synthetic_py, py::arg("n"), py::arg("k"),
          py::arg("query_noise") = 0.5, py::arg("content_noise") = 0.1, py::arg("seed") = 0);

    m.def("write_corpus_jsonl", &write_corpus_py, py::arg("instances"), py::arg("path"));

    m.def("run_avkmeans", &run_avkmeans_py, py::arg("corpus_path"), py::arg("k"),
          py::arg("iterations") = 5, py::arg("kmeans_steps") = 10, py::arg("dim") = 50,
          py::arg("arch") = "averaging", py::arg("lr") = 0.001, py::arg("seed") = 0,
          "load a corpus, run alternating-view k-means, return the view-1 assignment");
}
