#pragma once

#include <Eigen/Dense>
#include <vector>

#include "trackcast/rng.hpp"

namespace trackcast {

// One GRU cell in the standard reset/update/candidate form:
//   r = sigmoid(W_r x + U_r h + b_r)
//   z = sigmoid(W_z x + U_z h + b_z)
//   n = tanh(W_n x + U_n (r .* h) + b_n)
//   h' = (1 - z) .* n + z .* h
// Gate blocks are stacked row-wise in the order [r; z; n].
struct GruParams {
    Eigen::MatrixXd w;  // 3h x in
    Eigen::MatrixXd u;  // 3h x h
    Eigen::VectorXd b;  // 3h

    int hidden() const { return static_cast<int>(u.cols()); }
    int input() const { return static_cast<int>(w.cols()); }
};

GruParams gru_init(int input, int hidden, Rng& rng);

// Activations saved by a forward step for the matching backward step.
struct GruStepCache {
    Eigen::VectorXd x;
    Eigen::VectorXd h_prev;
    Eigen::VectorXd r;
    Eigen::VectorXd z;
    Eigen::VectorXd n;
};

Eigen::VectorXd gru_step(const GruParams& p, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& h_prev,
                         GruStepCache* cache = nullptr);

struct GruGrads {
    Eigen::MatrixXd w;
    Eigen::MatrixXd u;
    Eigen::VectorXd b;

    explicit GruGrads(const GruParams& p)
        : w(Eigen::MatrixXd::Zero(p.w.rows(), p.w.cols())),
          u(Eigen::MatrixXd::Zero(p.u.rows(), p.u.cols())),
          b(Eigen::VectorXd::Zero(p.b.size())) {}
};

// Reverse-mode step: takes d(loss)/d(h_t), accumulates parameter gradients,
// and writes the gradients flowing to h_{t-1} and x_t.
void gru_step_backward(const GruParams& p, const GruStepCache& cache,
                       const Eigen::VectorXd& dh, GruGrads& grads,
                       Eigen::VectorXd& dh_prev, Eigen::VectorXd& dx);

// Affine layer y = W x + b.
struct LinearParams {
    Eigen::MatrixXd w;
    Eigen::VectorXd b;
};

LinearParams linear_init(int input, int output, Rng& rng);

inline Eigen::VectorXd linear_forward(const LinearParams& p,
                                      const Eigen::VectorXd& x) {
    return p.w * x + p.b;
}

struct LinearGrads {
    Eigen::MatrixXd w;
    Eigen::VectorXd b;

    explicit LinearGrads(const LinearParams& p)
        : w(Eigen::MatrixXd::Zero(p.w.rows(), p.w.cols())),
          b(Eigen::VectorXd::Zero(p.b.size())) {}
};

// Accumulates dW/db from dy and returns the gradient w.r.t. x.
Eigen::VectorXd linear_backward(const LinearParams& p, const Eigen::VectorXd& x,
                                const Eigen::VectorXd& dy, LinearGrads& grads);

inline Eigen::VectorXd relu(const Eigen::VectorXd& x) {
    return x.cwiseMax(0.0);
}

// Gradient of relu given pre-activation values.
inline Eigen::VectorXd relu_backward(const Eigen::VectorXd& pre,
                                     const Eigen::VectorXd& dy) {
    return (pre.array() > 0.0).select(dy, Eigen::VectorXd::Zero(dy.size()));
}

}  // namespace trackcast
