#include "trackcast/forecaster.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace trackcast {

void ForecasterConfig::validate() const {
    std::string err;
    if (p < 2) err += "p must be >= 2; ";
    if (q < 1) err += "q must be >= 1; ";
    if (hidden < 1) err += "hidden must be positive; ";
    if (embed_dim < 1) err += "embed_dim must be positive; ";
    if (concat_dim < 2 || concat_dim % 2 != 0) {
        err += "concat_dim must be a positive even number; ";
    }
    if (!(input_scale > 0.0)) err += "input_scale must be positive; ";
    if (!err.empty()) {
        throw std::invalid_argument("ForecasterConfig: " + err);
    }
}

Eigen::Matrix<double, 8, 1> conditioned_input(const BoxWithVelocity& step,
                                              const BoundingBox& anchor,
                                              const ForecasterConfig& cfg) {
    Eigen::Matrix<double, 8, 1> v = to_vec8(step);
    if (cfg.center_past) {
        v(0) -= anchor.x;
        v(1) -= anchor.y;
    }
    return v / cfg.input_scale;
}

ForecasterParams forecaster_init(const ForecasterConfig& config,
                                 std::uint64_t seed) {
    config.validate();
    Rng rng(seed);
    ForecasterParams p;
    p.config = config;
    const int proj = config.proj_dim();
    p.past_encoder = gru_init(8, config.hidden, rng);
    p.enc_fc = linear_init(config.hidden, proj, rng);
    p.embed_fc = linear_init(config.embed_dim, proj, rng);
    p.past_decoder = gru_init(proj, config.hidden, rng);
    p.past_out = linear_init(config.hidden, 8, rng);
    p.fuse_fc = linear_init(config.concat_dim, config.concat_dim, rng);
    p.future_decoder = gru_init(config.concat_dim, config.hidden, rng);
    p.future_out = linear_init(config.hidden, 4, rng);
    return p;
}

PastSequence PastSequence::from_boxes(const std::vector<BoundingBox>& boxes,
                                      int p) {
    std::vector<BoxWithVelocity> hist;
    hist.reserve(boxes.size());
    const auto vels = velocities_from_boxes(boxes);
    for (size_t i = 0; i < boxes.size(); ++i) {
        hist.push_back({boxes[i], vels[i]});
    }
    return from_history(hist, p);
}

PastSequence PastSequence::from_history(
    const std::vector<BoxWithVelocity>& history, int p) {
    PastSequence seq;
    const int valid = std::min<int>(static_cast<int>(history.size()), p);
    seq.valid_len = valid;
    seq.steps.assign(p, BoxWithVelocity{});
    for (int i = 0; i < valid; ++i) {
        seq.steps[p - valid + i] = history[history.size() - valid + i];
    }
    return seq;
}

Eigen::Matrix<double, 8, 1> to_vec8(const BoxWithVelocity& s) {
    Eigen::Matrix<double, 8, 1> v;
    v << s.box.x, s.box.y, s.box.w, s.box.h, s.vel.dx, s.vel.dy, s.vel.dw,
        s.vel.dh;
    return v;
}

BoxWithVelocity from_vec8(const Eigen::Matrix<double, 8, 1>& v) {
    return {{v(0), v(1), v(2), v(3)}, {v(4), v(5), v(6), v(7)}};
}

EncodeResult encode_past(const PastSequence& past,
                         const ForecasterParams& params) {
    if (past.valid_len < 2) {
        throw std::logic_error("encode_past: not ready (needs two past steps)");
    }
    const int window = past.window();
    const BoundingBox anchor = past.steps[window - 1].box;
    Eigen::VectorXd h = Eigen::VectorXd::Zero(params.config.hidden);
    for (int i = window - past.valid_len; i < window; ++i) {
        h = gru_step(params.past_encoder,
                     conditioned_input(past.steps[i], anchor, params.config), h);
    }
    EncodeResult out;
    out.h_final = h;
    out.phi_b = relu(linear_forward(params.enc_fc, h));
    return out;
}

Eigen::VectorXd encode_embedding(const Eigen::VectorXd& context,
                                 const ForecasterParams& params) {
    if (context.size() != params.config.embed_dim) {
        throw std::invalid_argument("encode_embedding: context width mismatch");
    }
    return relu(linear_forward(params.embed_fc, context));
}

std::vector<BoxWithVelocity> decode_past(const Eigen::VectorXd& h_final,
                                         const Eigen::VectorXd& phi_b,
                                         const ForecasterParams& params,
                                         const BoundingBox& anchor) {
    const ForecasterConfig& cfg = params.config;
    std::vector<BoxWithVelocity> out;
    out.reserve(cfg.p);
    Eigen::VectorXd h = h_final;
    for (int t = 0; t < cfg.p; ++t) {
        h = gru_step(params.past_decoder, phi_b, h);
        Eigen::Matrix<double, 8, 1> v = linear_forward(params.past_out, h);
        v *= cfg.input_scale;
        if (cfg.center_past) {
            v(0) += anchor.x;
            v(1) += anchor.y;
        }
        out.push_back(from_vec8(v));
    }
    return out;
}

std::vector<Velocity> decode_future(const Eigen::VectorXd& h_final,
                                    const Eigen::VectorXd& phi_b,
                                    const Eigen::VectorXd& phi_e,
                                    const ForecasterParams& params, int q) {
    Eigen::VectorXd phi_c(phi_b.size() + phi_e.size());
    phi_c << phi_b, phi_e;
    const Eigen::VectorXd u = relu(linear_forward(params.fuse_fc, phi_c));

    std::vector<Velocity> out;
    out.reserve(q);
    const double s = params.config.input_scale;
    Eigen::VectorXd h = h_final;
    for (int t = 0; t < q; ++t) {
        h = gru_step(params.future_decoder, u, h);
        const Eigen::VectorXd v = linear_forward(params.future_out, h);
        out.push_back({s * v(0), s * v(1), s * v(2), s * v(3)});
    }
    return out;
}

ForecastHorizon trajectory_concat(const BoundingBox& last_box,
                                  const std::vector<Velocity>& velocities,
                                  ConcatMode mode) {
    if (velocities.empty()) {
        throw std::invalid_argument("trajectory_concat: needs q >= 1 velocities");
    }
    ForecastHorizon out;
    out.boxes.reserve(velocities.size());
    Velocity sum{};
    for (size_t i = 0; i < velocities.size(); ++i) {
        sum.dx += velocities[i].dx;
        sum.dy += velocities[i].dy;
        sum.dw += velocities[i].dw;
        sum.dh += velocities[i].dh;
        const double k =
            mode == ConcatMode::literal ? static_cast<double>(i + 1) : 1.0;
        out.boxes.push_back({last_box.x + k * sum.dx, last_box.y + k * sum.dy,
                             std::max(last_box.w + k * sum.dw, kMinBoxSize),
                             std::max(last_box.h + k * sum.dh, kMinBoxSize)});
    }
    return out;
}

double loss_past(const PastSequence& truth,
                 const std::vector<BoxWithVelocity>& pred) {
    if (truth.valid_len < 1) {
        throw std::invalid_argument("loss_past: no valid steps");
    }
    if (static_cast<int>(pred.size()) < truth.valid_len) {
        throw std::invalid_argument("loss_past: prediction shorter than valid steps");
    }
    const int window = truth.window();
    double total = 0.0;
    for (int k = 0; k < truth.valid_len; ++k) {
        const auto t = to_vec8(truth.steps[window - truth.valid_len + k]);
        const auto p = to_vec8(pred[k]);
        total += (t - p).cwiseAbs().sum();
    }
    return total / (8.0 * truth.valid_len);
}

double loss_future(const std::vector<BoundingBox>& truth_boxes,
                   const ForecastHorizon& pred, int valid_len) {
    if (valid_len < 1) {
        throw std::invalid_argument("loss_future: valid_len must be >= 1");
    }
    if (static_cast<int>(truth_boxes.size()) < valid_len ||
        static_cast<int>(pred.boxes.size()) < valid_len) {
        throw std::invalid_argument("loss_future: fewer boxes than valid_len");
    }
    double total = 0.0;
    for (int t = 0; t < valid_len; ++t) {
        total += std::abs(truth_boxes[t].x - pred.boxes[t].x) +
                 std::abs(truth_boxes[t].y - pred.boxes[t].y) +
                 std::abs(truth_boxes[t].w - pred.boxes[t].w) +
                 std::abs(truth_boxes[t].h - pred.boxes[t].h);
    }
    return total / (4.0 * valid_len);
}

double uncertainty_loss(const std::vector<double>& losses,
                        const std::vector<double>& weights) {
    if (losses.size() != weights.size()) {
        throw std::invalid_argument("uncertainty_loss: losses/weights length mismatch");
    }
    double total = 0.0;
    for (size_t i = 0; i < losses.size(); ++i) {
        total += std::exp(-weights[i]) * losses[i] + weights[i];
    }
    return 0.5 * total;
}

ForecastHorizon forecast(const PastSequence& history,
                         const Eigen::VectorXd& context,
                         const ForecasterParams& params, int q,
                         ConcatMode mode) {
    const EncodeResult enc = encode_past(history, params);
    const Eigen::VectorXd phi_e = encode_embedding(context, params);
    const std::vector<Velocity> vels =
        decode_future(enc.h_final, enc.phi_b, phi_e, params, q);
    int window = history.window();
    const BoundingBox last = history.steps[window - 1].box;
    return trajectory_concat(last, vels, mode);
}

namespace {

using nlohmann::json;

json tensor_to_json(const Eigen::MatrixXd& m) {
    json j;
    j["rows"] = m.rows();
    j["cols"] = m.cols();
    std::vector<double> data(m.data(), m.data() + m.size());
    j["data"] = data;
    return j;
}

Eigen::MatrixXd tensor_from_json(const json& j, Eigen::Index rows,
                                 Eigen::Index cols, const std::string& name) {
    if (j.at("rows").get<Eigen::Index>() != rows ||
        j.at("cols").get<Eigen::Index>() != cols) {
        throw std::runtime_error("load_params: tensor '" + name +
                                 "' shape does not match config");
    }
    const auto data = j.at("data").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
        throw std::runtime_error("load_params: tensor '" + name + "' bad size");
    }
    Eigen::MatrixXd m(rows, cols);
    std::copy(data.begin(), data.end(), m.data());
    return m;
}

}  // namespace

void save_params(const ForecasterParams& p, const std::string& path) {
    json j;
    j["format"] = "trackcast-forecaster";
    j["version"] = 1;
    j["config"] = {{"p", p.config.p},
                   {"q", p.config.q},
                   {"hidden", p.config.hidden},
                   {"embed_dim", p.config.embed_dim},
                   {"concat_dim", p.config.concat_dim},
                   {"input_scale", p.config.input_scale},
                   {"center_past", p.config.center_past}};
    json t;
    t["past_encoder.w"] = tensor_to_json(p.past_encoder.w);
    t["past_encoder.u"] = tensor_to_json(p.past_encoder.u);
    t["past_encoder.b"] = tensor_to_json(p.past_encoder.b);
    t["enc_fc.w"] = tensor_to_json(p.enc_fc.w);
    t["enc_fc.b"] = tensor_to_json(p.enc_fc.b);
    t["embed_fc.w"] = tensor_to_json(p.embed_fc.w);
    t["embed_fc.b"] = tensor_to_json(p.embed_fc.b);
    t["past_decoder.w"] = tensor_to_json(p.past_decoder.w);
    t["past_decoder.u"] = tensor_to_json(p.past_decoder.u);
    t["past_decoder.b"] = tensor_to_json(p.past_decoder.b);
    t["past_out.w"] = tensor_to_json(p.past_out.w);
    t["past_out.b"] = tensor_to_json(p.past_out.b);
    t["fuse_fc.w"] = tensor_to_json(p.fuse_fc.w);
    t["fuse_fc.b"] = tensor_to_json(p.fuse_fc.b);
    t["future_decoder.w"] = tensor_to_json(p.future_decoder.w);
    t["future_decoder.u"] = tensor_to_json(p.future_decoder.u);
    t["future_decoder.b"] = tensor_to_json(p.future_decoder.b);
    t["future_out.w"] = tensor_to_json(p.future_out.w);
    t["future_out.b"] = tensor_to_json(p.future_out.b);
    j["tensors"] = std::move(t);
    j["uncertainty"] = {{"s_det", p.s_det}, {"s_id", p.s_id}, {"s_for", p.s_for}};

    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("save_params: cannot write " + path);
    }
    out << j.dump();
}

ForecasterParams load_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("load_params: cannot read " + path);
    }
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::runtime_error("load_params: " + std::string(e.what()));
    }
    if (j.value("format", "") != "trackcast-forecaster") {
        throw std::runtime_error("load_params: not a forecaster checkpoint");
    }

    ForecasterParams p;
    const auto& c = j.at("config");
    p.config.p = c.at("p").get<int>();
    p.config.q = c.at("q").get<int>();
    p.config.hidden = c.at("hidden").get<int>();
    p.config.embed_dim = c.at("embed_dim").get<int>();
    p.config.concat_dim = c.at("concat_dim").get<int>();
    p.config.input_scale = c.value("input_scale", 1.0);
    p.config.center_past = c.value("center_past", false);
    p.config.validate();

    const int hidden = p.config.hidden;
    const int proj = p.config.proj_dim();
    const int concat = p.config.concat_dim;
    const auto& t = j.at("tensors");
    auto mat = [&](const char* name, Eigen::Index r, Eigen::Index c2) {
        return tensor_from_json(t.at(name), r, c2, name);
    };
    p.past_encoder.w = mat("past_encoder.w", 3 * hidden, 8);
    p.past_encoder.u = mat("past_encoder.u", 3 * hidden, hidden);
    p.past_encoder.b = mat("past_encoder.b", 3 * hidden, 1);
    p.enc_fc.w = mat("enc_fc.w", proj, hidden);
    p.enc_fc.b = mat("enc_fc.b", proj, 1);
    p.embed_fc.w = mat("embed_fc.w", proj, p.config.embed_dim);
    p.embed_fc.b = mat("embed_fc.b", proj, 1);
    p.past_decoder.w = mat("past_decoder.w", 3 * hidden, proj);
    p.past_decoder.u = mat("past_decoder.u", 3 * hidden, hidden);
    p.past_decoder.b = mat("past_decoder.b", 3 * hidden, 1);
    p.past_out.w = mat("past_out.w", 8, hidden);
    p.past_out.b = mat("past_out.b", 8, 1);
    p.fuse_fc.w = mat("fuse_fc.w", concat, concat);
    p.fuse_fc.b = mat("fuse_fc.b", concat, 1);
    p.future_decoder.w = mat("future_decoder.w", 3 * hidden, concat);
    p.future_decoder.u = mat("future_decoder.u", 3 * hidden, hidden);
    p.future_decoder.b = mat("future_decoder.b", 3 * hidden, 1);
    p.future_out.w = mat("future_out.w", 4, hidden);
    p.future_out.b = mat("future_out.b", 4, 1);

    const auto& s = j.at("uncertainty");
    p.s_det = s.at("s_det").get<double>();
    p.s_id = s.at("s_id").get<double>();
    p.s_for = s.at("s_for").get<double>();
    return p;
}

LearnedPredictor::LearnedPredictor(
    std::shared_ptr<const ForecasterParams> params, ConcatMode mode)
    : params_(std::move(params)),
      mode_(mode),
      context_(Eigen::VectorXd::Zero(params_->config.embed_dim)) {}

void LearnedPredictor::observe(const BoundingBox& box, int) {
    Velocity vel{};
    if (!history_.empty()) {
        const BoundingBox& prev = history_.back().box;
        vel = {box.x - prev.x, box.y - prev.y, box.w - prev.w, box.h - prev.h};
    }
    history_.push_back({box, vel});
    while (static_cast<int>(history_.size()) > params_->config.p) {
        history_.pop_front();
    }
    ++count_;
}

ForecastHorizon LearnedPredictor::predict(int q) const {
    if (!ready()) {
        throw std::logic_error("LearnedPredictor: not ready (needs two observations)");
    }
    const std::vector<BoxWithVelocity> hist(history_.begin(), history_.end());
    const PastSequence past = PastSequence::from_history(hist, params_->config.p);
    return forecast(past, context_, *params_, q, mode_);
}

void LearnedPredictor::reset() {
    history_.clear();
    context_.setZero();
    count_ = 0;
}

void LearnedPredictor::set_context(const Eigen::VectorXd& context) {
    if (context.size() != params_->config.embed_dim) {
        throw std::invalid_argument("LearnedPredictor: context width mismatch");
    }
    context_ = context;
}

}  // namespace trackcast
