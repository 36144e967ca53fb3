#include "trackcast/mot_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace trackcast {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_number(const std::string& s, const std::string& path, long line) {
    size_t pos = 0;
    double v;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw ParseError(path, line, "not a number: '" + s + "'");
    }
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos != s.size()) {
        throw ParseError(path, line, "trailing characters in number: '" + s + "'");
    }
    if (!std::isfinite(v)) {
        throw ParseError(path, line, "non-finite number: '" + s + "'");
    }
    return v;
}

}  // namespace

std::map<int, std::vector<size_t>> MotDataset::by_frame() const {
    std::map<int, std::vector<size_t>> out;
    for (size_t i = 0; i < records.size(); ++i) {
        out[records[i].frame].push_back(i);
    }
    return out;
}

std::map<int, std::vector<size_t>> MotDataset::by_track() const {
    std::map<int, std::vector<size_t>> out;
    for (size_t i = 0; i < records.size(); ++i) {
        out[records[i].id].push_back(i);
    }
    for (auto& [id, idx] : out) {
        std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
            return records[a].frame < records[b].frame;
        });
    }
    return out;
}

MotDataset read_mot(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("read_mot: cannot open " + path);
    }
    MotDataset data;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv(line);
        if (fields.size() != 10 && fields.size() != 11) {
            throw ParseError(path, line_no,
                             "expected 10 fields, got " +
                                 std::to_string(fields.size()));
        }
        MotRecord r;
        const double frame = parse_number(fields[0], path, line_no);
        if (frame < 1 || frame != std::floor(frame)) {
            throw ParseError(path, line_no, "frame must be an integer >= 1");
        }
        r.frame = static_cast<int>(frame);
        r.id = static_cast<int>(parse_number(fields[1], path, line_no));
        const double bb_left = parse_number(fields[2], path, line_no);
        const double bb_top = parse_number(fields[3], path, line_no);
        const double bb_w = parse_number(fields[4], path, line_no);
        const double bb_h = parse_number(fields[5], path, line_no);
        r.conf = parse_number(fields[6], path, line_no);
        parse_number(fields[7], path, line_no);  // x, pass-through
        parse_number(fields[8], path, line_no);  // y
        parse_number(fields[9], path, line_no);  // z
        if (fields.size() == 11) {
            r.flag = static_cast<int>(parse_number(fields[10], path, line_no));
        }
        if (bb_w <= 0.0 || bb_h <= 0.0) {
            std::cerr << "warning: " << path << ":" << line_no
                      << ": non-positive box size, line skipped\n";
            continue;
        }
        r.box = BoundingBox::from_top_left(bb_left, bb_top, bb_w, bb_h);
        data.records.push_back(r);
    }
    std::stable_sort(data.records.begin(), data.records.end(),
                     [](const MotRecord& a, const MotRecord& b) {
                         return a.frame < b.frame;
                     });
    return data;
}

void write_mot(const MotDataset& data, const std::string& path, bool as_result,
               bool extended) {
    std::vector<MotRecord> sorted = data.records;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const MotRecord& a, const MotRecord& b) {
                         if (a.frame != b.frame) return a.frame < b.frame;
                         return a.id < b.id;
                     });
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("write_mot: cannot write " + path);
    }
    char buf[256];
    for (const auto& r : sorted) {
        const double conf = as_result ? 1.0 : r.conf;
        int n = std::snprintf(buf, sizeof(buf),
                              "%d,%d,%.6f,%.6f,%.6f,%.6f,%.6f,-1,-1,-1", r.frame,
                              r.id, r.box.left(), r.box.top(), r.box.w, r.box.h,
                              conf);
        out.write(buf, n);
        if (extended) {
            out << ',' << (r.flag < 0 ? 0 : r.flag);
        }
        out << '\n';
    }
}

void EmbeddingTable::put(int frame, int det_index, Eigen::VectorXd value) {
    if (dim_ == 0) dim_ = static_cast<int>(value.size());
    if (value.size() != dim_) {
        throw std::invalid_argument("EmbeddingTable: width mismatch");
    }
    values_[{frame, det_index}] = std::move(value);
}

Eigen::VectorXd EmbeddingTable::get(int frame, int det_index) const {
    const auto it = values_.find({frame, det_index});
    if (it != values_.end()) return it->second;
    if (!warned_missing_) {
        std::cerr << "warning: missing embedding for frame " << frame << " det "
                  << det_index << ", using uniform fallback\n";
        warned_missing_ = true;
    }
    return Eigen::VectorXd::Constant(dim_, 1.0 / std::sqrt(double(dim_)));
}

bool EmbeddingTable::contains(int frame, int det_index) const {
    return values_.count({frame, det_index}) > 0;
}

EmbeddingTable read_embeddings(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("read_embeddings: cannot open " + path);
    }
    std::string line;
    long line_no = 0;
    if (!std::getline(in, line)) {
        throw ParseError(path, 1, "missing header row");
    }
    ++line_no;
    const auto header = split_csv(line);
    if (header.size() < 3 || header[0] != "frame" || header[1] != "det_index") {
        throw ParseError(path, 1, "header must be frame,det_index,e0,...");
    }
    const int dim = static_cast<int>(header.size()) - 2;
    EmbeddingTable table(dim);

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv(line);
        if (static_cast<int>(fields.size()) != dim + 2) {
            throw ParseError(path, line_no,
                             "row width " + std::to_string(fields.size() - 2) +
                                 " does not match declared width " +
                                 std::to_string(dim));
        }
        const int frame = static_cast<int>(parse_number(fields[0], path, line_no));
        const int det = static_cast<int>(parse_number(fields[1], path, line_no));
        Eigen::VectorXd v(dim);
        for (int i = 0; i < dim; ++i) {
            v(i) = parse_number(fields[i + 2], path, line_no);
        }
        const double norm = v.norm();
        if (norm <= 0.0) {
            throw ParseError(path, line_no, "zero embedding vector");
        }
        table.put(frame, det, v / norm);
    }
    return table;
}

void write_embeddings(const EmbeddingTable& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("write_embeddings: cannot write " + path);
    }
    out << "frame,det_index";
    for (int i = 0; i < table.dim(); ++i) out << ",e" << i;
    out << '\n';
    char buf[64];
    for (const auto& [key, v] : table.entries()) {
        out << key.first << ',' << key.second;
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            const int n = std::snprintf(buf, sizeof(buf), ",%.10g", v(i));
            out.write(buf, n);
        }
        out << '\n';
    }
}

}  // namespace trackcast
