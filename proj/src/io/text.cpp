#include "rdc/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace rdc {
namespace {

std::ofstream open_text(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw FormatError(path.string() + ": cannot open for writing");
  out.precision(17);
  return out;
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path.string() + ": cannot open file");
  return in;
}

// Splits a data line into numbers; returns false for blank/comment lines.
bool parse_numbers(const std::string& raw, std::vector<double>& values, const fs::path& path,
                   std::size_t line_no) {
  std::string line = raw.substr(0, raw.find('#'));
  std::istringstream ls(line);
  values.clear();
  std::string tok;
  while (ls >> tok) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": not a number '" + tok + "'");
    }
  }
  return !values.empty();
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v + 0.0);  // + 0.0 folds -0 to 0
  return buf;
}

}  // namespace

Trajectory read_tum(const fs::path& path) {
  std::ifstream in = open_input(path);
  Trajectory traj;
  std::string line;
  std::vector<double> v;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (!parse_numbers(line, v, path, line_no)) continue;
    if (v.size() != 8)
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected 8 fields, got " +
                        std::to_string(v.size()));
    const Eigen::Quaterniond q(v[7], v[4], v[5], v[6]);
    if (!(q.norm() > 0))
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": zero quaternion");
    traj.emplace_back(q, Eigen::Vector3d(v[1], v[2], v[3]), v[0],
                      static_cast<FrameId>(traj.size()));
  }
  return traj;
}

void write_tum(const fs::path& path, const Trajectory& trajectory) {
  std::ofstream out = open_text(path);
  out << "# timestamp tx ty tz qx qy qz qw\n";
  for (const Pose& p : trajectory) {
    const auto& t = p.translation();
    const auto& q = p.rotation();
    out << fmt(p.timestamp().value_or(double(p.frame_id()))) << ' ' << fmt(t.x()) << ' '
        << fmt(t.y()) << ' ' << fmt(t.z()) << ' ' << fmt(q.x()) << ' ' << fmt(q.y()) << ' '
        << fmt(q.z()) << ' ' << fmt(q.w()) << '\n';
  }
  if (!out) throw FormatError(path.string() + ": write failed");
}

void write_kitti_poses(const fs::path& path, const Trajectory& trajectory) {
  std::ofstream out = open_text(path);
  for (const Pose& p : trajectory) {
    const Eigen::Matrix4d m = p.matrix();
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 4; ++c) out << (r || c ? " " : "") << fmt(m(r, c));
    out << '\n';
  }
  if (!out) throw FormatError(path.string() + ": write failed");
}

Trajectory read_kitti_poses(const fs::path& path) {
  std::ifstream in = open_input(path);
  Trajectory traj;
  std::string line;
  std::vector<double> v;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (!parse_numbers(line, v, path, line_no)) continue;
    if (v.size() != 12)
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected 12 fields, got " +
                        std::to_string(v.size()));
    Eigen::Matrix3d r;
    r << v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10];
    traj.emplace_back(r, Eigen::Vector3d(v[3], v[7], v[11]), std::nullopt,
                      static_cast<FrameId>(traj.size()));
  }
  return traj;
}

std::pair<Eigen::Matrix3Xd, Eigen::Matrix3Xd> read_point_pairs(const fs::path& path) {
  std::ifstream in = open_input(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::vector<double> v;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (!parse_numbers(line, v, path, line_no)) continue;
    if (v.size() != 6)
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected 6 fields, got " +
                        std::to_string(v.size()));
    rows.push_back(v);
  }
  Eigen::Matrix3Xd src(3, static_cast<Eigen::Index>(rows.size())), dst(3, src.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    src.col(c) << rows[i][0], rows[i][1], rows[i][2];
    dst.col(c) << rows[i][3], rows[i][4], rows[i][5];
  }
  return {src, dst};
}

void write_point_pairs(const fs::path& path, const Eigen::Matrix3Xd& src,
                       const Eigen::Matrix3Xd& dst) {
  std::ofstream out = open_text(path);
  out << "# sx sy sz dx dy dz\n";
  for (Eigen::Index i = 0; i < src.cols(); ++i) {
    out << fmt(src(0, i)) << ' ' << fmt(src(1, i)) << ' ' << fmt(src(2, i)) << ' '
        << fmt(dst(0, i)) << ' ' << fmt(dst(1, i)) << ' ' << fmt(dst(2, i)) << '\n';
  }
}

std::vector<FrameId> read_id_list(const fs::path& path) {
  std::ifstream in = open_input(path);
  std::vector<FrameId> ids;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    std::istringstream ls(line.substr(0, line.find('#')));
    long long id = 0;
    if (ls >> id) {
      ids.push_back(static_cast<FrameId>(id));
    } else if (line.find_first_not_of(" \t\r") != std::string::npos && line[line.find_first_not_of(" \t\r")] != '#') {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected a frame id");
    }
  }
  return ids;
}

void write_id_list(const fs::path& path, const std::vector<FrameId>& ids) {
  std::ofstream out = open_text(path);
  for (FrameId id : ids) out << id << '\n';
}

fs::path frame_file(const fs::path& dir, FrameId id, const std::string& ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06lld", static_cast<long long>(id));
  return dir / (std::string(buf) + ext);
}

}  // namespace rdc
