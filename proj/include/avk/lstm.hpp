#pragma once

#include <Eigen/Core>

namespace avk::lstm {

/// Per-sequence forward activations kept for backprop. Gate layout in the
/// stacked weight matrices is [input; forget; candidate; output].
struct Trace {
    Eigen::MatrixXd x;   // E x T inputs
    Eigen::MatrixXd i;   // H x T
    Eigen::MatrixXd f;   // H x T
    Eigen::MatrixXd g;   // H x T
    Eigen::MatrixXd o;   // H x T
    Eigen::MatrixXd c;   // H x T cell states
    Eigen::MatrixXd tc;  // H x T tanh(c)
    Eigen::MatrixXd h;   // H x (T+1); column 0 is the zero initial state

    Eigen::Index steps() const { return x.cols(); }
    Eigen::VectorXd final_h() const { return h.col(h.cols() - 1); }
};

/// Runs the cell over x (E x T) from zero initial state.
void forward(const Eigen::MatrixXd& wx, const Eigen::MatrixXd& wh, const Eigen::VectorXd& b,
             const Eigen::MatrixXd& x, Trace& trace);

/// Backprop through time. `dh` is the upstream gradient on every step's
/// hidden output (H x T). Accumulates into the weight gradients and returns
/// the gradient on the inputs (E x T).
Eigen::MatrixXd backward(const Eigen::MatrixXd& wx, const Eigen::MatrixXd& wh, const Trace& trace,
                         const Eigen::MatrixXd& dh, Eigen::MatrixXd& dwx, Eigen::MatrixXd& dwh,
                         Eigen::MatrixXd& db);

}  // namespace avk::lstm
