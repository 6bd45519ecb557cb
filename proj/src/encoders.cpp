#include "avk/encoders.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "avk/lstm.hpp"

namespace avk {

// ---------------------------------------------------------------------------
// LSTM cell

namespace lstm {

namespace {
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}

void forward(const Eigen::MatrixXd& wx, const Eigen::MatrixXd& wh, const Eigen::VectorXd& b,
             const Eigen::MatrixXd& x, Trace& trace) {
    const Eigen::Index hidden = wh.cols();
    const Eigen::Index steps = x.cols();
    trace.x = x;
    trace.i.resize(hidden, steps);
    trace.f.resize(hidden, steps);
    trace.g.resize(hidden, steps);
    trace.o.resize(hidden, steps);
    trace.c.resize(hidden, steps);
    trace.tc.resize(hidden, steps);
    trace.h = Eigen::MatrixXd::Zero(hidden, steps + 1);

    for (Eigen::Index t = 0; t < steps; ++t) {
        const Eigen::VectorXd z = wx * x.col(t) + wh * trace.h.col(t) + b;
        trace.i.col(t) = z.segment(0, hidden).unaryExpr([](double v) { return sigmoid(v); });
        trace.f.col(t) = z.segment(hidden, hidden).unaryExpr([](double v) { return sigmoid(v); });
        trace.g.col(t) = z.segment(2 * hidden, hidden).array().tanh();
        trace.o.col(t) = z.segment(3 * hidden, hidden).unaryExpr([](double v) { return sigmoid(v); });
        const Eigen::VectorXd c_prev =
            t > 0 ? Eigen::VectorXd(trace.c.col(t - 1)) : Eigen::VectorXd::Zero(hidden);
        trace.c.col(t) =
            trace.f.col(t).cwiseProduct(c_prev) + trace.i.col(t).cwiseProduct(trace.g.col(t));
        trace.tc.col(t) = trace.c.col(t).array().tanh();
        trace.h.col(t + 1) = trace.o.col(t).cwiseProduct(trace.tc.col(t));
    }
}

Eigen::MatrixXd backward(const Eigen::MatrixXd& wx, const Eigen::MatrixXd& wh, const Trace& trace,
                         const Eigen::MatrixXd& dh, Eigen::MatrixXd& dwx, Eigen::MatrixXd& dwh,
                         Eigen::MatrixXd& db) {
    const Eigen::Index hidden = wh.cols();
    const Eigen::Index steps = trace.steps();
    Eigen::MatrixXd dx = Eigen::MatrixXd::Zero(trace.x.rows(), steps);
    Eigen::VectorXd dh_carry = Eigen::VectorXd::Zero(hidden);
    Eigen::VectorXd dc_carry = Eigen::VectorXd::Zero(hidden);

    for (Eigen::Index t = steps - 1; t >= 0; --t) {
        const Eigen::VectorXd dht = dh.col(t) + dh_carry;
        const Eigen::VectorXd do_ = dht.cwiseProduct(trace.tc.col(t));
        const Eigen::VectorXd dc =
            dc_carry + dht.cwiseProduct(trace.o.col(t))
                           .cwiseProduct((1.0 - trace.tc.col(t).array().square()).matrix());
        const Eigen::VectorXd c_prev =
            t > 0 ? Eigen::VectorXd(trace.c.col(t - 1)) : Eigen::VectorXd::Zero(hidden);
        const Eigen::VectorXd di = dc.cwiseProduct(trace.g.col(t));
        const Eigen::VectorXd dg = dc.cwiseProduct(trace.i.col(t));
        const Eigen::VectorXd df = dc.cwiseProduct(c_prev);
        dc_carry = dc.cwiseProduct(trace.f.col(t));

        Eigen::VectorXd dz(4 * hidden);
        dz.segment(0, hidden) =
            di.array() * trace.i.col(t).array() * (1.0 - trace.i.col(t).array());
        dz.segment(hidden, hidden) =
            df.array() * trace.f.col(t).array() * (1.0 - trace.f.col(t).array());
        dz.segment(2 * hidden, hidden) = dg.array() * (1.0 - trace.g.col(t).array().square());
        dz.segment(3 * hidden, hidden) =
            do_.array() * trace.o.col(t).array() * (1.0 - trace.o.col(t).array());

        dwx.noalias() += dz * trace.x.col(t).transpose();
        dwh.noalias() += dz * trace.h.col(t).transpose();
        db += dz;
        dx.col(t).noalias() = wx.transpose() * dz;
        dh_carry.noalias() = wh.transpose() * dz;
    }
    return dx;
}

}  // namespace lstm

// ---------------------------------------------------------------------------
// Forward traces

namespace {

struct AvgViewTrace {
    std::vector<std::vector<int>> utterances;  // token ids per utterance
    Eigen::VectorXd mean;                      // E
    Eigen::VectorXd out;                       // D (post-activation)
};

struct SeqViewTrace {
    std::vector<int> tokens;
    lstm::Trace fw;
    lstm::Trace bw;
};

struct HierViewTrace {
    std::vector<SeqViewTrace> utterances;
    lstm::Trace ctx_fw;
    lstm::Trace ctx_bw;
};

}  // namespace

struct ForwardTrace {
    Arch arch = Arch::kAveraging;
    const Encoder* owner = nullptr;
    std::vector<AvgViewTrace> avg;
    std::vector<SeqViewTrace> seq;
    std::vector<HierViewTrace> hier;
};

EncodedBatch::EncodedBatch() = default;
EncodedBatch::EncodedBatch(EncodedBatch&&) noexcept = default;
EncodedBatch& EncodedBatch::operator=(EncodedBatch&&) noexcept = default;
EncodedBatch::~EncodedBatch() = default;

// ---------------------------------------------------------------------------
// Encoder

std::string to_string(Arch arch) {
    switch (arch) {
        case Arch::kAveraging: return "averaging";
        case Arch::kSequence: return "sequence";
        case Arch::kHierarchical: return "hierarchical";
    }
    return "?";
}

std::optional<Arch> arch_from_string(std::string_view name) {
    if (name == "averaging") return Arch::kAveraging;
    if (name == "sequence") return Arch::kSequence;
    if (name == "hierarchical") return Arch::kHierarchical;
    return std::nullopt;
}

namespace {

constexpr double kInitScale = 0.08;

void add_lstm_cell(ParameterSet& params, const std::string& prefix, Eigen::Index input_dim,
                   Eigen::Index hidden, Rng& rng) {
    ParameterSet::init_uniform(params.add(prefix + ".Wx", 4 * hidden, input_dim), kInitScale, rng);
    ParameterSet::init_uniform(params.add(prefix + ".Wh", 4 * hidden, hidden), kInitScale, rng);
    params.add(prefix + ".b", 4 * hidden, 1);  // biases start at zero
}

Eigen::MatrixXd gather_tokens(const EmbeddingTable& table, const std::vector<int>& ids) {
    Eigen::MatrixXd x(table.dim(), static_cast<Eigen::Index>(ids.size()));
    for (std::size_t t = 0; t < ids.size(); ++t)
        x.col(static_cast<Eigen::Index>(t)) = table.value.row(ids[t]).transpose();
    return x;
}

Eigen::MatrixXd reverse_cols(const Eigen::MatrixXd& x) { return x.rowwise().reverse(); }

}  // namespace

Encoder::Encoder(EncoderConfig config, std::shared_ptr<EmbeddingTable> table)
    : config_(config), table_(std::move(table)) {
    if (!table_) throw UsageError("encoder requires an embedding table");
    Rng rng(config_.init_seed);
    const Eigen::Index emb = table_->dim();
    const Eigen::Index hidden = config_.hidden_dim;
    switch (config_.arch) {
        case Arch::kAveraging:
            ParameterSet::init_uniform(params_.add("proj.W", config_.proj_dim, emb), kInitScale,
                                       rng);
            params_.add("proj.b", config_.proj_dim, 1);
            break;
        case Arch::kSequence:
            add_lstm_cell(params_, "utt.fw", emb, hidden, rng);
            add_lstm_cell(params_, "utt.bw", emb, hidden, rng);
            break;
        case Arch::kHierarchical:
            add_lstm_cell(params_, "utt.fw", emb, hidden, rng);
            add_lstm_cell(params_, "utt.bw", emb, hidden, rng);
            add_lstm_cell(params_, "ctx.fw", 2 * hidden, hidden, rng);
            add_lstm_cell(params_, "ctx.bw", 2 * hidden, hidden, rng);
            break;
    }
}

int Encoder::output_dim() const {
    return config_.arch == Arch::kAveraging ? config_.proj_dim : 2 * config_.hidden_dim;
}

namespace {

void check_token_ids(const std::vector<ViewRef>& views, int vocab_rows) {
    for (const ViewRef& view : views) {
        for (const Utterance& utt : view) {
            for (int id : utt.tokens) {
                if (id < 0 || id >= vocab_rows)
                    throw UsageError("token id out of embedding-table range");
            }
        }
    }
}

}  // namespace

EncodedBatch Encoder::forward(const std::vector<ViewRef>& views) const {
    check_token_ids(views, static_cast<int>(table_->rows()));
    const Eigen::Index n = static_cast<Eigen::Index>(views.size());
    const Eigen::Index d = output_dim();

    EncodedBatch batch;
    batch.outputs = Eigen::MatrixXd::Zero(n, d);
    batch.trace = std::make_unique<ForwardTrace>();
    batch.trace->arch = config_.arch;
    batch.trace->owner = this;

    switch (config_.arch) {
        case Arch::kAveraging: {
            const Eigen::MatrixXd& w = params_.at("proj.W").value;
            const Eigen::VectorXd b = params_.at("proj.b").value.col(0);
            batch.trace->avg.resize(static_cast<std::size_t>(n));
            for (Eigen::Index vi = 0; vi < n; ++vi) {
                AvgViewTrace& tr = batch.trace->avg[static_cast<std::size_t>(vi)];
                const ViewRef& view = views[static_cast<std::size_t>(vi)];
                if (view.empty()) continue;  // degenerate: zero row
                Eigen::VectorXd mean = Eigen::VectorXd::Zero(table_->dim());
                for (const Utterance& utt : view) {
                    tr.utterances.push_back(utt.tokens);
                    Eigen::VectorXd utt_mean = Eigen::VectorXd::Zero(table_->dim());
                    for (int id : utt.tokens) utt_mean += table_->value.row(id).transpose();
                    mean += utt_mean / static_cast<double>(utt.tokens.size());
                }
                mean /= static_cast<double>(view.size());
                Eigen::VectorXd out = w * mean + b;
                if (config_.activation == Activation::kTanh) out = out.array().tanh();
                tr.mean = mean;
                tr.out = out;
                batch.outputs.row(vi) = out.transpose();
            }
            break;
        }
        case Arch::kSequence: {
            batch.trace->seq.resize(static_cast<std::size_t>(n));
            const Eigen::Index hidden = config_.hidden_dim;
            for (Eigen::Index vi = 0; vi < n; ++vi) {
                const ViewRef& view = views[static_cast<std::size_t>(vi)];
                if (view.empty()) continue;
                if (view.size() != 1)
                    throw UsageError("sequence encoder expects single-utterance views");
                SeqViewTrace& tr = batch.trace->seq[static_cast<std::size_t>(vi)];
                tr.tokens = view[0].tokens;
                const Eigen::MatrixXd x = gather_tokens(*table_, tr.tokens);
                lstm::forward(params_.at("utt.fw.Wx").value, params_.at("utt.fw.Wh").value,
                              params_.at("utt.fw.b").value.col(0), x, tr.fw);
                lstm::forward(params_.at("utt.bw.Wx").value, params_.at("utt.bw.Wh").value,
                              params_.at("utt.bw.b").value.col(0), reverse_cols(x), tr.bw);
                batch.outputs.row(vi).segment(0, hidden) = tr.fw.final_h().transpose();
                batch.outputs.row(vi).segment(hidden, hidden) = tr.bw.final_h().transpose();
            }
            break;
        }
        case Arch::kHierarchical: {
            batch.trace->hier.resize(static_cast<std::size_t>(n));
            const Eigen::Index hidden = config_.hidden_dim;
            for (Eigen::Index vi = 0; vi < n; ++vi) {
                const ViewRef& view = views[static_cast<std::size_t>(vi)];
                if (view.empty()) continue;  // degenerate: zero row
                HierViewTrace& tr = batch.trace->hier[static_cast<std::size_t>(vi)];
                Eigen::MatrixXd utt_vecs(2 * hidden, static_cast<Eigen::Index>(view.size()));
                tr.utterances.resize(view.size());
                for (std::size_t ui = 0; ui < view.size(); ++ui) {
                    SeqViewTrace& ut = tr.utterances[ui];
                    ut.tokens = view[ui].tokens;
                    const Eigen::MatrixXd x = gather_tokens(*table_, ut.tokens);
                    lstm::forward(params_.at("utt.fw.Wx").value, params_.at("utt.fw.Wh").value,
                                  params_.at("utt.fw.b").value.col(0), x, ut.fw);
                    lstm::forward(params_.at("utt.bw.Wx").value, params_.at("utt.bw.Wh").value,
                                  params_.at("utt.bw.b").value.col(0), reverse_cols(x), ut.bw);
                    utt_vecs.col(static_cast<Eigen::Index>(ui)).segment(0, hidden) = ut.fw.final_h();
                    utt_vecs.col(static_cast<Eigen::Index>(ui)).segment(hidden, hidden) =
                        ut.bw.final_h();
                }
                lstm::forward(params_.at("ctx.fw.Wx").value, params_.at("ctx.fw.Wh").value,
                              params_.at("ctx.fw.b").value.col(0), utt_vecs, tr.ctx_fw);
                lstm::forward(params_.at("ctx.bw.Wx").value, params_.at("ctx.bw.Wh").value,
                              params_.at("ctx.bw.b").value.col(0), reverse_cols(utt_vecs),
                              tr.ctx_bw);
                batch.outputs.row(vi).segment(0, hidden) = tr.ctx_fw.final_h().transpose();
                batch.outputs.row(vi).segment(hidden, hidden) = tr.ctx_bw.final_h().transpose();
            }
            break;
        }
    }
    return batch;
}

Eigen::MatrixXd Encoder::encode(const std::vector<ViewRef>& views) const {
    return forward(views).outputs;  // trace freed on return
}

namespace {

/// Backward through one BiLSTM over inputs x given upstream on the
/// concatenated final states; returns dx.
Eigen::MatrixXd bilstm_backward(ParameterSet& params, const std::string& prefix,
                                const SeqViewTrace& tr, const Eigen::VectorXd& upstream,
                                Eigen::Index hidden) {
    const Eigen::Index steps = tr.fw.steps();
    Eigen::MatrixXd dh_fw = Eigen::MatrixXd::Zero(hidden, steps);
    dh_fw.col(steps - 1) = upstream.segment(0, hidden);
    Eigen::MatrixXd dh_bw = Eigen::MatrixXd::Zero(hidden, steps);
    dh_bw.col(steps - 1) = upstream.segment(hidden, hidden);

    Eigen::MatrixXd dx_fw = lstm::backward(
        params.at(prefix + ".fw.Wx").value, params.at(prefix + ".fw.Wh").value, tr.fw, dh_fw,
        params.at(prefix + ".fw.Wx").grad, params.at(prefix + ".fw.Wh").grad,
        params.at(prefix + ".fw.b").grad);
    Eigen::MatrixXd dx_bw = lstm::backward(
        params.at(prefix + ".bw.Wx").value, params.at(prefix + ".bw.Wh").value, tr.bw, dh_bw,
        params.at(prefix + ".bw.Wx").grad, params.at(prefix + ".bw.Wh").grad,
        params.at(prefix + ".bw.b").grad);
    return dx_fw + dx_bw.rowwise().reverse();
}

void scatter_token_grads(EmbeddingTable& table, const std::vector<int>& ids,
                         const Eigen::MatrixXd& dx) {
    for (std::size_t t = 0; t < ids.size(); ++t)
        table.grad.row(ids[t]) += dx.col(static_cast<Eigen::Index>(t)).transpose();
}

}  // namespace

void Encoder::backward(EncodedBatch& batch, const Eigen::MatrixXd& upstream) {
    if (!batch.trace) throw UsageError("backward called on a consumed batch");
    if (batch.trace->owner != this) throw UsageError("batch does not belong to this encoder");
    if (upstream.rows() != batch.outputs.rows() || upstream.cols() != batch.outputs.cols())
        throw UsageError("upstream gradient shape mismatch");

    const Eigen::Index n = upstream.rows();
    const Eigen::Index hidden = config_.hidden_dim;

    switch (config_.arch) {
        case Arch::kAveraging: {
            Tensor& w = params_.at("proj.W");
            Tensor& b = params_.at("proj.b");
            for (Eigen::Index vi = 0; vi < n; ++vi) {
                const AvgViewTrace& tr = batch.trace->avg[static_cast<std::size_t>(vi)];
                if (tr.utterances.empty()) continue;  // degenerate view
                Eigen::VectorXd s = upstream.row(vi).transpose();
                if (config_.activation == Activation::kTanh)
                    s = s.cwiseProduct((1.0 - tr.out.array().square()).matrix());
                b.grad.col(0) += s;
                w.grad.noalias() += s * tr.mean.transpose();
                const Eigen::VectorXd dmean =
                    (w.value.transpose() * s) / static_cast<double>(tr.utterances.size());
                for (const std::vector<int>& tokens : tr.utterances) {
                    const Eigen::RowVectorXd dtok =
                        dmean.transpose() / static_cast<double>(tokens.size());
                    for (int id : tokens) table_->grad.row(id) += dtok;
                }
            }
            break;
        }
        case Arch::kSequence: {
            for (Eigen::Index vi = 0; vi < n; ++vi) {
                SeqViewTrace& tr = batch.trace->seq[static_cast<std::size_t>(vi)];
                if (tr.tokens.empty()) continue;
                const Eigen::MatrixXd dx =
                    bilstm_backward(params_, "utt", tr, upstream.row(vi).transpose(), hidden);
                scatter_token_grads(*table_, tr.tokens, dx);
            }
            break;
        }
        case Arch::kHierarchical: {
            for (Eigen::Index vi = 0; vi < n; ++vi) {
                HierViewTrace& tr = batch.trace->hier[static_cast<std::size_t>(vi)];
                if (tr.utterances.empty()) continue;  // degenerate view
                const Eigen::Index m = static_cast<Eigen::Index>(tr.utterances.size());
                Eigen::MatrixXd dh_fw = Eigen::MatrixXd::Zero(hidden, m);
                dh_fw.col(m - 1) = upstream.row(vi).segment(0, hidden).transpose();
                Eigen::MatrixXd dh_bw = Eigen::MatrixXd::Zero(hidden, m);
                dh_bw.col(m - 1) = upstream.row(vi).segment(hidden, hidden).transpose();

                Eigen::MatrixXd dv_fw = lstm::backward(
                    params_.at("ctx.fw.Wx").value, params_.at("ctx.fw.Wh").value, tr.ctx_fw, dh_fw,
                    params_.at("ctx.fw.Wx").grad, params_.at("ctx.fw.Wh").grad,
                    params_.at("ctx.fw.b").grad);
                Eigen::MatrixXd dv_bw = lstm::backward(
                    params_.at("ctx.bw.Wx").value, params_.at("ctx.bw.Wh").value, tr.ctx_bw, dh_bw,
                    params_.at("ctx.bw.Wx").grad, params_.at("ctx.bw.Wh").grad,
                    params_.at("ctx.bw.b").grad);
                const Eigen::MatrixXd dv = dv_fw + dv_bw.rowwise().reverse();

                for (Eigen::Index ui = 0; ui < m; ++ui) {
                    const SeqViewTrace& ut = tr.utterances[static_cast<std::size_t>(ui)];
                    const Eigen::MatrixXd dx =
                        bilstm_backward(params_, "utt", ut, dv.col(ui), hidden);
                    scatter_token_grads(*table_, ut.tokens, dx);
                }
            }
            break;
        }
    }
    batch.trace.reset();
}

void Encoder::zero_grad() {
    params_.zero_grad();
    table_->zero_grad();
}

int Encoder::copy_parameters_from(const Encoder& other) {
    int copied = 0;
    for (auto& [name, tensor] : params_) {
        if (!other.params().has(name)) continue;
        const Tensor& src = other.params().at(name);
        if (src.value.rows() != tensor.value.rows() || src.value.cols() != tensor.value.cols())
            continue;
        tensor.value = src.value;
        ++copied;
    }
    return copied;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char kMagic[8] = {'A', 'V', 'K', 'C', 'K', 'P', 'T', '1'};

void write_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_i64(std::ostream& out, std::int64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_string(std::ostream& out, const std::string& s) {
    write_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}
void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
    write_i64(out, m.rows());
    write_i64(out, m.cols());
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            const double v = m(r, c);
            out.write(reinterpret_cast<const char*>(&v), sizeof(v));
        }
}

std::uint32_t read_u32(std::istream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}
std::int64_t read_i64(std::istream& in) {
    std::int64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}
std::string read_string(std::istream& in) {
    const std::uint32_t len = read_u32(in);
    std::string s(len, '\0');
    in.read(s.data(), len);
    return s;
}
Eigen::MatrixXd read_matrix(std::istream& in) {
    const std::int64_t rows = read_i64(in);
    const std::int64_t cols = read_i64(in);
    if (rows < 0 || cols < 0) throw DataError("corrupt checkpoint: bad matrix shape");
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) {
            double v = 0;
            in.read(reinterpret_cast<char*>(&v), sizeof(v));
            m(r, c) = v;
        }
    return m;
}

}  // namespace

Checkpoint make_checkpoint(const Encoder& encoder) {
    Checkpoint ck;
    ck.config = encoder.config();
    for (const auto& [name, tensor] : encoder.params()) ck.tensors.emplace_back(name, tensor.value);
    ck.embedding = encoder.table().value;
    ck.embedding_trainable = encoder.table().trainable;
    return ck;
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    out.write(kMagic, sizeof(kMagic));
    write_string(out, to_string(ck.config.arch));
    write_u32(out, static_cast<std::uint32_t>(ck.config.proj_dim));
    write_u32(out, static_cast<std::uint32_t>(ck.config.hidden_dim));
    write_u32(out, ck.config.activation == Activation::kTanh ? 0u : 1u);
    write_i64(out, static_cast<std::int64_t>(ck.config.init_seed));
    write_u32(out, static_cast<std::uint32_t>(ck.tensors.size()));
    for (const auto& [name, value] : ck.tensors) {
        write_string(out, name);
        write_matrix(out, value);
    }
    write_matrix(out, ck.embedding);
    write_u32(out, static_cast<std::uint32_t>(ck.embedding_trainable.size()));
    out.write(reinterpret_cast<const char*>(ck.embedding_trainable.data()),
              static_cast<std::streamsize>(ck.embedding_trainable.size()));
    if (!out) throw DataError("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    char magic[8] = {};
    in.read(magic, sizeof(magic));
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw DataError("not a checkpoint file: " + path);

    Checkpoint ck;
    const std::string arch = read_string(in);
    const auto parsed = arch_from_string(arch);
    if (!parsed) throw DataError("unknown architecture in checkpoint: " + arch);
    ck.config.arch = *parsed;
    ck.config.proj_dim = static_cast<int>(read_u32(in));
    ck.config.hidden_dim = static_cast<int>(read_u32(in));
    ck.config.activation = read_u32(in) == 0 ? Activation::kTanh : Activation::kIdentity;
    ck.config.init_seed = static_cast<std::uint64_t>(read_i64(in));
    const std::uint32_t n_tensors = read_u32(in);
    for (std::uint32_t i = 0; i < n_tensors; ++i) {
        std::string name = read_string(in);
        ck.tensors.emplace_back(std::move(name), read_matrix(in));
    }
    ck.embedding = read_matrix(in);
    const std::uint32_t n_rows = read_u32(in);
    ck.embedding_trainable.resize(n_rows);
    in.read(reinterpret_cast<char*>(ck.embedding_trainable.data()), n_rows);
    if (!in) throw DataError("corrupt checkpoint: " + path);
    return ck;
}

Encoder encoder_from_checkpoint(const Checkpoint& ck, std::shared_ptr<EmbeddingTable> table) {
    if (!table) {
        table = std::make_shared<EmbeddingTable>(ck.embedding.rows(), ck.embedding.cols());
        table->value = ck.embedding;
        table->trainable = ck.embedding_trainable;
    }
    Encoder encoder(ck.config, std::move(table));
    for (const auto& [name, value] : ck.tensors) {
        if (!encoder.params().has(name))
            throw DataError("checkpoint tensor does not fit architecture: " + name);
        Tensor& t = encoder.params().at(name);
        if (t.value.rows() != value.rows() || t.value.cols() != value.cols())
            throw DataError("checkpoint tensor shape mismatch: " + name);
        t.value = value;
    }
    return encoder;
}

}  // namespace avk
