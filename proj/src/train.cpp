#include "trackcast/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace trackcast {

namespace {

double sign_of(double diff) { return diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0); }

// Cached activations of one sample's forward pass.
struct SampleTrace {
    std::vector<GruStepCache> enc_caches;
    Eigen::VectorXd h_final;
    Eigen::VectorXd enc_fc_pre, phi_b;
    Eigen::VectorXd emb_fc_pre, phi_e;
    Eigen::VectorXd phi_c, fuse_pre, u;

    std::vector<GruStepCache> pd_caches;
    std::vector<Eigen::VectorXd> pd_h;
    std::vector<Eigen::Matrix<double, 8, 1>> pd_out;

    std::vector<GruStepCache> fd_caches;
    std::vector<Eigen::VectorXd> fd_h;
    std::vector<Eigen::Vector4d> fd_v;
    std::vector<Eigen::Vector4d> zsum;
    std::vector<Eigen::Vector4d> pre_floor;  // box before the size floor
    std::vector<Eigen::Vector4d> pred_box;
};

void check_sample(const TrainingSample& s, const ForecasterConfig& cfg) {
    if (s.past.valid_len < 2) {
        throw std::invalid_argument("TrainingSample: past valid_len must be >= 2");
    }
    if (s.past.window() != cfg.p) {
        throw std::invalid_argument("TrainingSample: past window does not match config p");
    }
    if (s.future_valid_len < 1 ||
        s.future_valid_len > static_cast<int>(s.future_boxes.size())) {
        throw std::invalid_argument("TrainingSample: bad future_valid_len");
    }
    if (s.context.size() != cfg.embed_dim) {
        throw std::invalid_argument("TrainingSample: context width mismatch");
    }
    if (!(s.last_box == s.past.steps.back().box)) {
        throw std::invalid_argument(
            "TrainingSample: last_box must equal the final valid past box");
    }
}

}  // namespace

void TrainConfig::validate() const {
    std::string err;
    if (epochs < 1) err += "epochs must be >= 1; ";
    if (batch_size < 1) err += "batch_size must be >= 1; ";
    if (lr < 0.0 || lr_after_decay < 0.0) err += "learning rates must be >= 0; ";
    if (s_init < -2.0 || s_init > 5.0) err += "s_init must lie in [-2, 5]; ";
    if (window_stride < 1) err += "window_stride must be >= 1; ";
    if (max_windows < 0) err += "max_windows must be >= 0; ";
    if (!err.empty()) {
        throw std::invalid_argument("TrainConfig: " + err);
    }
}

ForecasterGrads::ForecasterGrads(const ForecasterParams& p)
    : past_encoder(p.past_encoder),
      enc_fc(p.enc_fc),
      embed_fc(p.embed_fc),
      past_decoder(p.past_decoder),
      past_out(p.past_out),
      fuse_fc(p.fuse_fc),
      future_decoder(p.future_decoder),
      future_out(p.future_out) {}

void ForecasterGrads::set_zero() {
    past_encoder.w.setZero();
    past_encoder.u.setZero();
    past_encoder.b.setZero();
    enc_fc.w.setZero();
    enc_fc.b.setZero();
    embed_fc.w.setZero();
    embed_fc.b.setZero();
    past_decoder.w.setZero();
    past_decoder.u.setZero();
    past_decoder.b.setZero();
    past_out.w.setZero();
    past_out.b.setZero();
    fuse_fc.w.setZero();
    fuse_fc.b.setZero();
    future_decoder.w.setZero();
    future_decoder.u.setZero();
    future_decoder.b.setZero();
    future_out.w.setZero();
    future_out.b.setZero();
    s_for = 0.0;
}

double training_loss(const std::vector<TrainingSample>& batch,
                     const ForecasterParams& params, ConcatMode mode,
                     ForecasterGrads* grads, double* l_past_out,
                     double* l_future_out) {
    if (batch.empty()) {
        throw std::invalid_argument("training_loss: empty batch");
    }
    const ForecasterConfig& cfg = params.config;
    for (const auto& s : batch) check_sample(s, cfg);

    const int proj = cfg.proj_dim();
    std::vector<SampleTrace> traces(batch.size());
    double past_abs = 0.0, future_abs = 0.0;
    long past_steps_total = 0, future_steps_total = 0;

    // ---- forward ----
    for (size_t k = 0; k < batch.size(); ++k) {
        const TrainingSample& s = batch[k];
        SampleTrace& tr = traces[k];
        const int window = s.past.window();
        const int valid = s.past.valid_len;
        const int qv = s.future_valid_len;
        past_steps_total += valid;
        future_steps_total += qv;

        // encoder over the valid steps only
        tr.enc_caches.resize(valid);
        Eigen::VectorXd h = Eigen::VectorXd::Zero(cfg.hidden);
        for (int i = 0; i < valid; ++i) {
            h = gru_step(params.past_encoder,
                         conditioned_input(s.past.steps[window - valid + i],
                                           s.last_box, cfg),
                         h, &tr.enc_caches[i]);
        }
        tr.h_final = h;
        tr.enc_fc_pre = linear_forward(params.enc_fc, tr.h_final);
        tr.phi_b = relu(tr.enc_fc_pre);
        tr.emb_fc_pre = linear_forward(params.embed_fc, s.context);
        tr.phi_e = relu(tr.emb_fc_pre);

        // past decoder for the penalized steps; outputs are de-conditioned to
        // the raw frame before the loss
        tr.pd_caches.resize(valid);
        tr.pd_h.resize(valid);
        tr.pd_out.resize(valid);
        h = tr.h_final;
        for (int t = 0; t < valid; ++t) {
            h = gru_step(params.past_decoder, tr.phi_b, h, &tr.pd_caches[t]);
            tr.pd_h[t] = h;
            Eigen::Matrix<double, 8, 1> raw = linear_forward(params.past_out, h);
            raw *= cfg.input_scale;
            if (cfg.center_past) {
                raw(0) += s.last_box.x;
                raw(1) += s.last_box.y;
            }
            tr.pd_out[t] = raw;
            const auto truth = to_vec8(s.past.steps[window - valid + t]);
            past_abs += (truth - tr.pd_out[t]).cwiseAbs().sum();
        }

        // future decoder for the penalized steps
        tr.phi_c.resize(2 * proj);
        tr.phi_c << tr.phi_b, tr.phi_e;
        tr.fuse_pre = linear_forward(params.fuse_fc, tr.phi_c);
        tr.u = relu(tr.fuse_pre);

        tr.fd_caches.resize(qv);
        tr.fd_h.resize(qv);
        tr.fd_v.resize(qv);
        tr.zsum.resize(qv);
        tr.pre_floor.resize(qv);
        tr.pred_box.resize(qv);
        h = tr.h_final;
        Eigen::Vector4d z = Eigen::Vector4d::Zero();
        for (int t = 0; t < qv; ++t) {
            h = gru_step(params.future_decoder, tr.u, h, &tr.fd_caches[t]);
            tr.fd_h[t] = h;
            tr.fd_v[t] = linear_forward(params.future_out, h);
            z += cfg.input_scale * tr.fd_v[t];
            tr.zsum[t] = z;
            const double f =
                mode == ConcatMode::literal ? static_cast<double>(t + 1) : 1.0;
            Eigen::Vector4d box;
            box << s.last_box.x + f * z(0), s.last_box.y + f * z(1),
                s.last_box.w + f * z(2), s.last_box.h + f * z(3);
            tr.pre_floor[t] = box;
            box(2) = std::max(box(2), kMinBoxSize);
            box(3) = std::max(box(3), kMinBoxSize);
            tr.pred_box[t] = box;
            const BoundingBox& gt = s.future_boxes[t];
            future_abs += std::abs(gt.x - box(0)) + std::abs(gt.y - box(1)) +
                          std::abs(gt.w - box(2)) + std::abs(gt.h - box(3));
        }
    }

    const double denom_past = 8.0 * static_cast<double>(past_steps_total);
    const double denom_future = 4.0 * static_cast<double>(future_steps_total);
    const double l_past = past_abs / denom_past;
    const double l_future = future_abs / denom_future;
    const double l_for = forecast_loss(l_past, l_future);
    const double total = 0.5 * (std::exp(-params.s_for) * l_for + params.s_for);
    if (l_past_out) *l_past_out = l_past;
    if (l_future_out) *l_future_out = l_future;
    if (!grads) return total;

    // ---- backward ----
    const double dl_for = 0.5 * std::exp(-params.s_for);
    grads->s_for += 0.5 * (1.0 - std::exp(-params.s_for) * l_for);

    for (size_t k = 0; k < batch.size(); ++k) {
        const TrainingSample& s = batch[k];
        SampleTrace& tr = traces[k];
        const int window = s.past.window();
        const int valid = s.past.valid_len;
        const int qv = s.future_valid_len;

        // future boxes -> velocities (reverse cumulative sum through the
        // concatenation layer, with the floor mask on sizes)
        std::vector<Eigen::Vector4d> dz(qv);
        for (int t = 0; t < qv; ++t) {
            const BoundingBox& gt = s.future_boxes[t];
            Eigen::Vector4d db;
            db << sign_of(tr.pred_box[t](0) - gt.x),
                sign_of(tr.pred_box[t](1) - gt.y),
                sign_of(tr.pred_box[t](2) - gt.w),
                sign_of(tr.pred_box[t](3) - gt.h);
            db *= dl_for / denom_future;
            if (tr.pre_floor[t](2) <= kMinBoxSize) db(2) = 0.0;
            if (tr.pre_floor[t](3) <= kMinBoxSize) db(3) = 0.0;
            const double f =
                mode == ConcatMode::literal ? static_cast<double>(t + 1) : 1.0;
            dz[t] = f * db;
        }

        Eigen::VectorXd du_sum = Eigen::VectorXd::Zero(tr.u.size());
        Eigen::VectorXd dh_carry = Eigen::VectorXd::Zero(cfg.hidden);
        Eigen::Vector4d dz_carry = Eigen::Vector4d::Zero();
        for (int t = qv - 1; t >= 0; --t) {
            dz_carry += dz[t];
            const Eigen::VectorXd dv = cfg.input_scale * dz_carry;
            Eigen::VectorXd dh =
                linear_backward(params.future_out, tr.fd_h[t], dv,
                                grads->future_out) +
                dh_carry;
            Eigen::VectorXd dh_prev, dx;
            gru_step_backward(params.future_decoder, tr.fd_caches[t], dh,
                              grads->future_decoder, dh_prev, dx);
            dh_carry = dh_prev;
            du_sum += dx;
        }
        Eigen::VectorXd dh_final = dh_carry;

        const Eigen::VectorXd dfuse_pre = relu_backward(tr.fuse_pre, du_sum);
        const Eigen::VectorXd dphi_c =
            linear_backward(params.fuse_fc, tr.phi_c, dfuse_pre, grads->fuse_fc);
        Eigen::VectorXd dphi_b = dphi_c.head(proj);
        const Eigen::VectorXd dphi_e = dphi_c.tail(proj);

        const Eigen::VectorXd demb_pre = relu_backward(tr.emb_fc_pre, dphi_e);
        linear_backward(params.embed_fc, s.context, demb_pre, grads->embed_fc);

        // past decoder
        dh_carry.setZero();
        for (int t = valid - 1; t >= 0; --t) {
            const auto truth = to_vec8(s.past.steps[window - valid + t]);
            Eigen::Matrix<double, 8, 1> dout;
            for (int c = 0; c < 8; ++c) {
                dout(c) = sign_of(tr.pd_out[t](c) - truth(c)) * dl_for *
                          cfg.input_scale / denom_past;
            }
            Eigen::VectorXd dh =
                linear_backward(params.past_out, tr.pd_h[t], dout,
                                grads->past_out) +
                dh_carry;
            Eigen::VectorXd dh_prev, dx;
            gru_step_backward(params.past_decoder, tr.pd_caches[t], dh,
                              grads->past_decoder, dh_prev, dx);
            dh_carry = dh_prev;
            dphi_b += dx;
        }
        dh_final += dh_carry;

        const Eigen::VectorXd denc_pre = relu_backward(tr.enc_fc_pre, dphi_b);
        dh_final +=
            linear_backward(params.enc_fc, tr.h_final, denc_pre, grads->enc_fc);

        // encoder
        dh_carry = dh_final;
        for (int i = valid - 1; i >= 0; --i) {
            Eigen::VectorXd dh_prev, dx;
            gru_step_backward(params.past_encoder, tr.enc_caches[i], dh_carry,
                              grads->past_encoder, dh_prev, dx);
            dh_carry = dh_prev;
        }
    }
    return total;
}

std::vector<TensorView> tensor_views(ForecasterParams& p) {
    std::vector<TensorView> v;
    auto add = [&](const char* name, Eigen::MatrixXd& m) {
        v.push_back({name, m.data(), static_cast<std::size_t>(m.size())});
    };
    auto addv = [&](const char* name, Eigen::VectorXd& m) {
        v.push_back({name, m.data(), static_cast<std::size_t>(m.size())});
    };
    add("past_encoder.w", p.past_encoder.w);
    add("past_encoder.u", p.past_encoder.u);
    addv("past_encoder.b", p.past_encoder.b);
    add("enc_fc.w", p.enc_fc.w);
    addv("enc_fc.b", p.enc_fc.b);
    add("embed_fc.w", p.embed_fc.w);
    addv("embed_fc.b", p.embed_fc.b);
    add("past_decoder.w", p.past_decoder.w);
    add("past_decoder.u", p.past_decoder.u);
    addv("past_decoder.b", p.past_decoder.b);
    add("past_out.w", p.past_out.w);
    addv("past_out.b", p.past_out.b);
    add("fuse_fc.w", p.fuse_fc.w);
    addv("fuse_fc.b", p.fuse_fc.b);
    add("future_decoder.w", p.future_decoder.w);
    add("future_decoder.u", p.future_decoder.u);
    addv("future_decoder.b", p.future_decoder.b);
    add("future_out.w", p.future_out.w);
    addv("future_out.b", p.future_out.b);
    v.push_back({"s_for", &p.s_for, 1});
    return v;
}

std::vector<TensorView> tensor_views(ForecasterGrads& g) {
    std::vector<TensorView> v;
    auto add = [&](const char* name, Eigen::MatrixXd& m) {
        v.push_back({name, m.data(), static_cast<std::size_t>(m.size())});
    };
    auto addv = [&](const char* name, Eigen::VectorXd& m) {
        v.push_back({name, m.data(), static_cast<std::size_t>(m.size())});
    };
    add("past_encoder.w", g.past_encoder.w);
    add("past_encoder.u", g.past_encoder.u);
    addv("past_encoder.b", g.past_encoder.b);
    add("enc_fc.w", g.enc_fc.w);
    addv("enc_fc.b", g.enc_fc.b);
    add("embed_fc.w", g.embed_fc.w);
    addv("embed_fc.b", g.embed_fc.b);
    add("past_decoder.w", g.past_decoder.w);
    add("past_decoder.u", g.past_decoder.u);
    addv("past_decoder.b", g.past_decoder.b);
    add("past_out.w", g.past_out.w);
    addv("past_out.b", g.past_out.b);
    add("fuse_fc.w", g.fuse_fc.w);
    addv("fuse_fc.b", g.fuse_fc.b);
    add("future_decoder.w", g.future_decoder.w);
    add("future_decoder.u", g.future_decoder.u);
    addv("future_decoder.b", g.future_decoder.b);
    add("future_out.w", g.future_out.w);
    addv("future_out.b", g.future_out.b);
    v.push_back({"s_for", &g.s_for, 1});
    return v;
}

TrainResult train_forecaster(const std::vector<TrainingSample>& samples,
                             const ForecasterConfig& config,
                             const TrainConfig& tc) {
    config.validate();
    tc.validate();
    if (samples.empty()) {
        throw std::invalid_argument("train_forecaster: empty dataset");
    }
    for (const auto& s : samples) check_sample(s, config);

    TrainResult result;
    result.params = forecaster_init(config, tc.seed);
    result.params.s_det = tc.s_init;
    result.params.s_id = tc.s_init;
    result.params.s_for = tc.s_init;

    ForecasterGrads grads(result.params);
    auto pviews = tensor_views(result.params);
    auto gviews = tensor_views(grads);

    std::vector<std::vector<double>> adam_m(pviews.size()), adam_v(pviews.size());
    for (size_t i = 0; i < pviews.size(); ++i) {
        adam_m[i].assign(pviews[i].size, 0.0);
        adam_v[i].assign(pviews[i].size, 0.0);
    }

    std::vector<size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    Rng shuffler(tc.seed ^ 0x9e3779b97f4a7c15ULL);

    long step = 0;
    for (int epoch = 0; epoch < tc.epochs; ++epoch) {
        const double lr = epoch >= tc.decay_epoch ? tc.lr_after_decay : tc.lr;
        shuffler.shuffle(order);

        double epoch_loss = 0.0;
        int batches = 0;
        for (size_t start = 0; start < order.size(); start += tc.batch_size) {
            const size_t end =
                std::min(order.size(), start + static_cast<size_t>(tc.batch_size));
            std::vector<TrainingSample> batch;
            batch.reserve(end - start);
            for (size_t i = start; i < end; ++i) batch.push_back(samples[order[i]]);

            grads.set_zero();
            const double loss =
                training_loss(batch, result.params, tc.concat_mode, &grads);
            if (!std::isfinite(loss)) {
                std::ostringstream msg;
                msg << "train_forecaster: non-finite loss at epoch " << epoch
                    << ", batch starting at " << start << " (samples";
                for (size_t i = start; i < end; ++i) msg << ' ' << order[i];
                msg << ")";
                throw std::runtime_error(msg.str());
            }
            epoch_loss += loss;
            ++batches;

            ++step;
            const double bc1 = 1.0 - std::pow(tc.adam_beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(tc.adam_beta2, static_cast<double>(step));
            for (size_t i = 0; i < pviews.size(); ++i) {
                double* p = pviews[i].data;
                const double* g = gviews[i].data;
                for (size_t j = 0; j < pviews[i].size; ++j) {
                    adam_m[i][j] = tc.adam_beta1 * adam_m[i][j] +
                                   (1.0 - tc.adam_beta1) * g[j];
                    adam_v[i][j] = tc.adam_beta2 * adam_v[i][j] +
                                   (1.0 - tc.adam_beta2) * g[j] * g[j];
                    p[j] -= lr * (adam_m[i][j] / bc1) /
                            (std::sqrt(adam_v[i][j] / bc2) + tc.adam_eps);
                    if (!std::isfinite(p[j])) {
                        throw std::runtime_error(
                            std::string("train_forecaster: non-finite value in ") +
                            pviews[i].name + " after optimizer step");
                    }
                }
            }
        }
        result.log.push_back({epoch, epoch_loss / batches, lr});
    }
    return result;
}

std::vector<TrainingSample> build_training_samples(
    const std::vector<TrackedSequence>& tracks, const ForecasterConfig& config,
    const std::vector<Eigen::VectorXd>* frame_context, int first_frame,
    int stride) {
    config.validate();
    if (stride < 1) {
        throw std::invalid_argument("build_training_samples: stride must be >= 1");
    }
    const Eigen::VectorXd zero_ctx = Eigen::VectorXd::Zero(config.embed_dim);
    std::vector<TrainingSample> samples;

    for (const auto& track : tracks) {
        if (track.frames.size() != track.boxes.size()) {
            throw std::invalid_argument(
                "build_training_samples: frames/boxes length mismatch");
        }
        // split into runs of consecutive frames
        size_t run_start = 0;
        while (run_start < track.frames.size()) {
            size_t run_end = run_start + 1;
            while (run_end < track.frames.size() &&
                   track.frames[run_end] == track.frames[run_end - 1] + 1) {
                ++run_end;
            }
            const auto run_len = static_cast<int>(run_end - run_start);
            std::vector<BoundingBox> run_boxes(
                track.boxes.begin() + static_cast<long>(run_start),
                track.boxes.begin() + static_cast<long>(run_end));
            const auto vels = velocities_from_boxes(run_boxes);
            std::vector<BoxWithVelocity> run_hist(run_len);
            for (int i = 0; i < run_len; ++i) run_hist[i] = {run_boxes[i], vels[i]};

            for (int a = 2; a < run_len; a += stride) {
                TrainingSample s;
                const int past_lo = std::max(0, a - config.p);
                const std::vector<BoxWithVelocity> past_slice(
                    run_hist.begin() + past_lo, run_hist.begin() + a);
                s.past = PastSequence::from_history(past_slice, config.p);
                const int qv = std::min(config.q, run_len - a);
                s.future_boxes.assign(run_boxes.begin() + a,
                                      run_boxes.begin() + a + qv);
                s.future_valid_len = qv;
                s.last_box = run_boxes[a - 1];
                const int anchor_frame = track.frames[run_start + a];
                if (frame_context &&
                    anchor_frame - first_frame >= 0 &&
                    anchor_frame - first_frame <
                        static_cast<int>(frame_context->size())) {
                    s.context = (*frame_context)[anchor_frame - first_frame];
                } else {
                    s.context = zero_ctx;
                }
                samples.push_back(std::move(s));
            }
            run_start = run_end;
        }
    }
    return samples;
}

void write_training_log(const std::vector<EpochRecord>& log,
                        const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("write_training_log: cannot write " + path);
    }
    out << "epoch,loss,lr\n";
    for (const auto& r : log) {
        out << r.epoch << ',' << r.loss << ',' << r.lr << '\n';
    }
}

}  // namespace trackcast
