#pragma once

#include <array>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "capnet/errors.hpp"

namespace capnet {

// Valence/arousal pair. Values are only meaningful inside [-1, 1]; anything
// outside that range marks the label invalid (covers the dataset's -5
// sentinel without hard-coding it).
struct AffectState {
  double valence = 0.0;
  double arousal = 0.0;

  bool in_range() const {
    return valence >= -1.0 && valence <= 1.0 && arousal >= -1.0 && arousal <= 1.0;
  }
  friend bool operator==(const AffectState& a, const AffectState& b) {
    return a.valence == b.valence && a.arousal == b.arousal;
  }
};

// A label as read from an annotation file. Raw values are kept even when
// invalid so files re-serialize losslessly.
struct LabelEntry {
  AffectState value;
  bool valid = false;
};

struct FrameRef {
  std::string video_id;
  std::int64_t frame_index = 0;  // 1-based
  std::string path;              // opaque locator; a file path here
};

struct LabeledVideo {
  std::string video_id;
  int frame_rate = 30;
  std::map<std::int64_t, FrameRef> frames;   // sparse: missing files are legal gaps
  std::map<std::int64_t, LabelEntry> labels;
};

// ---------------------------------------------------------------------------
// Annotation files: UTF-8 text, header "valence,arousal", then one "v,a"
// line per frame; line i+1 corresponds to frame i.

namespace detail {

inline double parse_annotation_value(const std::string& field, std::size_t line_no) {
  double v = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end)
    throw ParseError("bad number '" + field + "'", line_no);
  return v;
}

inline std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace detail

inline std::vector<std::array<double, 2>> parse_annotation_rows(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ParseError("missing header", 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "valence,arousal")
    throw ParseError("expected header \"valence,arousal\", got \"" + line + "\"", 1);
  std::vector<std::array<double, 2>> rows;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() && is.eof()) break;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ParseError("missing comma", line_no);
    if (line.find(',', comma + 1) != std::string::npos)
      throw ParseError("too many fields", line_no);
    rows.push_back({detail::parse_annotation_value(line.substr(0, comma), line_no),
                    detail::parse_annotation_value(line.substr(comma + 1), line_no)});
  }
  return rows;
}

inline std::string serialize_annotation_rows(const std::vector<std::array<double, 2>>& rows) {
  std::string out = "valence,arousal\n";
  for (const auto& row : rows) {
    out += detail::format_double(row[0]);
    out += ',';
    out += detail::format_double(row[1]);
    out += '\n';
  }
  return out;
}

inline std::map<std::int64_t, LabelEntry> labels_from_rows(
    const std::vector<std::array<double, 2>>& rows) {
  std::map<std::int64_t, LabelEntry> labels;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    LabelEntry e;
    e.value = AffectState{rows[i][0], rows[i][1]};
    e.valid = e.value.in_range();
    labels.emplace(static_cast<std::int64_t>(i + 1), e);
  }
  return labels;
}

// Annotation stream -> frame_index -> label. Out-of-range rows come back
// marked invalid, not dropped.
inline std::map<std::int64_t, LabelEntry> load_annotations(std::istream& is) {
  return labels_from_rows(parse_annotation_rows(is));
}

inline std::map<std::int64_t, LabelEntry> load_annotations_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open: " + path);
  return load_annotations(is);
}

// ---------------------------------------------------------------------------
// Directory scan. Layout:
//   <root>/<video_id>.csv          annotation file
//   <root>/<video_id>/%05d.ppm     cropped frame images (gaps are legal)
//   <root>/<video_id>/stimulus.csv synthetic ground-truth sidecar (ignored)

struct ScanResult {
  std::vector<LabeledVideo> videos;  // sorted by video_id
  std::size_t skipped_files = 0;     // .ppm files whose names did not parse
};

inline ScanResult scan_video_dir(const std::string& root, int frame_rate = 30) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw IoError("not a directory: " + root);
  ScanResult result;
  std::vector<fs::path> annotation_files;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv")
      annotation_files.push_back(entry.path());
  }
  std::sort(annotation_files.begin(), annotation_files.end());
  for (const fs::path& ann : annotation_files) {
    LabeledVideo video;
    video.video_id = ann.stem().string();
    video.frame_rate = frame_rate;
    video.labels = load_annotations_file(ann.string());
    const fs::path frame_dir = fs::path(root) / video.video_id;
    if (!fs::is_directory(frame_dir))
      throw Error("dataset: annotation " + ann.string() + " has no frame directory " +
                  frame_dir.string());
    for (const auto& entry : fs::directory_iterator(frame_dir)) {
      if (!entry.is_regular_file() || entry.path().extension() != ".ppm") continue;
      const std::string stem = entry.path().stem().string();
      std::int64_t index = 0;
      const auto [ptr, ec] = std::from_chars(stem.data(), stem.data() + stem.size(), index);
      if (ec != std::errc() || ptr != stem.data() + stem.size() || index < 1) {
        ++result.skipped_files;
        continue;
      }
      video.frames.emplace(
          index, FrameRef{video.video_id, index, entry.path().string()});
    }
    result.videos.push_back(std::move(video));
  }
  return result;
}

inline std::string frame_file_name(std::int64_t index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%05lld.ppm", static_cast<long long>(index));
  return buf;
}

}  // namespace capnet
