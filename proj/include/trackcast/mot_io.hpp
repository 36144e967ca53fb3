#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "trackcast/geometry.hpp"

namespace trackcast {

// One MOTChallenge text line: frame,id,bb_left,bb_top,bb_width,bb_height,
// conf,x,y,z with an optional trailing flag column in extended mode.
// Boxes are centroid-form in memory; the top-left form exists only in files.
struct MotRecord {
    int frame = 1;
    int id = -1;  // -1 for raw detections
    BoundingBox box;
    double conf = 1.0;
    int flag = -1;  // -1 absent, 0 detected, 1 forecasted
};

struct MotDataset {
    std::vector<MotRecord> records;

    bool empty() const { return records.empty(); }
    // frame -> indices into records, frames ascending
    std::map<int, std::vector<size_t>> by_frame() const;
    // id -> indices into records, per id sorted by frame
    std::map<int, std::vector<size_t>> by_track() const;
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& path, long line, const std::string& what)
        : std::runtime_error(path + ":" + std::to_string(line) + ": " + what),
          line_number(line) {}
    long line_number;
};

// Reads a MOT file; lines with non-positive width/height are skipped with a
// warning on stderr. Malformed lines raise ParseError with the line number.
MotDataset read_mot(const std::string& path);

// Writes records ordered by (frame, id) with 6-decimal coordinates; conf is
// forced to 1 when as_result is set. extended appends the flag column.
void write_mot(const MotDataset& data, const std::string& path,
               bool as_result = false, bool extended = false);

// Per-detection appearance vectors keyed by (frame, det index within frame).
class EmbeddingTable {
public:
    EmbeddingTable() = default;
    explicit EmbeddingTable(int dim) : dim_(dim) {}

    int dim() const { return dim_; }
    void put(int frame, int det_index, Eigen::VectorXd value);
    // Unit-norm lookup; missing pairs fall back to the uniform unit vector
    // (with a one-time warning).
    Eigen::VectorXd get(int frame, int det_index) const;
    bool contains(int frame, int det_index) const;
    size_t size() const { return values_.size(); }
    const std::map<std::pair<int, int>, Eigen::VectorXd>& entries() const {
        return values_;
    }

private:
    int dim_ = 0;
    std::map<std::pair<int, int>, Eigen::VectorXd> values_;
    mutable bool warned_missing_ = false;
};

// CSV with a header row declaring the width; vectors are L2-normalized on
// load. Rows of the wrong width raise ParseError.
EmbeddingTable read_embeddings(const std::string& path);
void write_embeddings(const EmbeddingTable& table, const std::string& path);

}  // namespace trackcast
