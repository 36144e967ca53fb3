#include "trackcast/gru.hpp"

#include <cmath>

namespace trackcast {

namespace {

Eigen::VectorXd sigmoid(const Eigen::VectorXd& x) {
    return (1.0 / (1.0 + (-x.array()).exp())).matrix();
}

Eigen::MatrixXd uniform_matrix(int rows, int cols, double bound, Rng& rng) {
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            m(i, j) = rng.uniform(-bound, bound);
        }
    }
    return m;
}

}  // namespace

GruParams gru_init(int input, int hidden, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    GruParams p;
    p.w = uniform_matrix(3 * hidden, input, bound, rng);
    p.u = uniform_matrix(3 * hidden, hidden, bound, rng);
    p.b = uniform_matrix(3 * hidden, 1, bound, rng);
    return p;
}

Eigen::VectorXd gru_step(const GruParams& p, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& h_prev, GruStepCache* cache) {
    const int h = p.hidden();
    const Eigen::VectorXd wx = p.w * x;
    const Eigen::VectorXd r =
        sigmoid(wx.segment(0, h) + p.u.middleRows(0, h) * h_prev +
                p.b.segment(0, h));
    const Eigen::VectorXd z =
        sigmoid(wx.segment(h, h) + p.u.middleRows(h, h) * h_prev +
                p.b.segment(h, h));
    const Eigen::VectorXd n =
        (wx.segment(2 * h, h) +
         p.u.middleRows(2 * h, h) * r.cwiseProduct(h_prev) +
         p.b.segment(2 * h, h))
            .array()
            .tanh();
    const Eigen::VectorXd h_next =
        (1.0 - z.array()).matrix().cwiseProduct(n) + z.cwiseProduct(h_prev);
    if (cache) {
        cache->x = x;
        cache->h_prev = h_prev;
        cache->r = r;
        cache->z = z;
        cache->n = n;
    }
    return h_next;
}

void gru_step_backward(const GruParams& p, const GruStepCache& c,
                       const Eigen::VectorXd& dh, GruGrads& grads,
                       Eigen::VectorXd& dh_prev, Eigen::VectorXd& dx) {
    const int h = p.hidden();

    const Eigen::VectorXd dn = dh.cwiseProduct((1.0 - c.z.array()).matrix());
    const Eigen::VectorXd dz = dh.cwiseProduct(c.h_prev - c.n);
    dh_prev = dh.cwiseProduct(c.z);

    // candidate gate, tanh'
    const Eigen::VectorXd da_n =
        dn.cwiseProduct((1.0 - c.n.array().square()).matrix());
    grads.w.middleRows(2 * h, h).noalias() += da_n * c.x.transpose();
    grads.u.middleRows(2 * h, h).noalias() +=
        da_n * c.r.cwiseProduct(c.h_prev).transpose();
    grads.b.segment(2 * h, h) += da_n;

    const Eigen::VectorXd drh = p.u.middleRows(2 * h, h).transpose() * da_n;
    const Eigen::VectorXd dr = drh.cwiseProduct(c.h_prev);
    dh_prev += drh.cwiseProduct(c.r);

    // update gate, sigmoid'
    const Eigen::VectorXd da_z =
        dz.cwiseProduct(c.z.cwiseProduct((1.0 - c.z.array()).matrix()));
    grads.w.middleRows(h, h).noalias() += da_z * c.x.transpose();
    grads.u.middleRows(h, h).noalias() += da_z * c.h_prev.transpose();
    grads.b.segment(h, h) += da_z;

    // reset gate, sigmoid'
    const Eigen::VectorXd da_r =
        dr.cwiseProduct(c.r.cwiseProduct((1.0 - c.r.array()).matrix()));
    grads.w.middleRows(0, h).noalias() += da_r * c.x.transpose();
    grads.u.middleRows(0, h).noalias() += da_r * c.h_prev.transpose();
    grads.b.segment(0, h) += da_r;

    dh_prev += p.u.middleRows(h, h).transpose() * da_z +
               p.u.middleRows(0, h).transpose() * da_r;
    dx = p.w.middleRows(2 * h, h).transpose() * da_n +
         p.w.middleRows(h, h).transpose() * da_z +
         p.w.middleRows(0, h).transpose() * da_r;
}

LinearParams linear_init(int input, int output, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(input));
    LinearParams p;
    p.w = uniform_matrix(output, input, bound, rng);
    p.b = uniform_matrix(output, 1, bound, rng);
    return p;
}

Eigen::VectorXd linear_backward(const LinearParams& p, const Eigen::VectorXd& x,
                                const Eigen::VectorXd& dy, LinearGrads& grads) {
    grads.w.noalias() += dy * x.transpose();
    grads.b += dy;
    return p.w.transpose() * dy;
}

}  // namespace trackcast
