#include "shiftnmf/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace shiftnmf::io {

namespace {

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s, const fs::path& path) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  double x = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw IoError(path.string() + ": malformed number '" + std::string(s) + "'");
  }
  return x;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw IoError("cannot read " + path.string());
  return in;
}

json read_json(const fs::path& path) {
  auto in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

// Next whitespace-separated PGM header token, skipping '#' comments.
std::string pgm_token(std::istream& in, const fs::path& path) {
  std::string tok;
  while (true) {
    const int c = in.get();
    if (c == EOF) break;
    if (c == '#') {
      std::string ignore;
      std::getline(in, ignore);
      if (!tok.empty()) break;
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  if (tok.empty()) throw IoError(path.string() + ": truncated PGM header");
  return tok;
}

std::size_t parse_size(const std::string& tok, const fs::path& path) {
  std::size_t v = 0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size()) {
    throw IoError(path.string() + ": expected an integer, got '" + tok + "'");
  }
  return v;
}

// img_2.pgm sorts before img_10.pgm.
bool natural_less(const std::string& a, const std::string& b) {
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (std::isdigit(static_cast<unsigned char>(a[i])) && std::isdigit(static_cast<unsigned char>(b[j]))) {
      std::size_t ie = i, je = j;
      while (ie < a.size() && std::isdigit(static_cast<unsigned char>(a[ie]))) ++ie;
      while (je < b.size() && std::isdigit(static_cast<unsigned char>(b[je]))) ++je;
      const std::string_view da = std::string_view(a).substr(i, ie - i);
      const std::string_view db = std::string_view(b).substr(j, je - j);
      if (da.size() != db.size()) return da.size() < db.size();
      if (da != db) return da < db;
      i = ie;
      j = je;
    } else {
      if (a[i] != b[j]) return a[i] < b[j];
      ++i;
      ++j;
    }
  }
  return a.size() - i < b.size() - j;
}

}  // namespace

void write_matrix_csv(const fs::path& path, const DenseMatrix& m) {
  auto out = open_out(path);
  out << m.rows() << ',' << m.cols() << '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

DenseMatrix read_matrix_csv(const fs::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": empty file");
  const auto header = split(line, ',');
  if (header.size() != 2) throw IoError(path.string() + ": header must be 'rows,cols'");
  const auto rows = static_cast<std::size_t>(parse_double(header[0], path));
  const auto cols = static_cast<std::size_t>(parse_double(header[1], path));
  if (rows == 0 || cols == 0) throw IoError(path.string() + ": matrix must be non-empty");
  DenseMatrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (!std::getline(in, line)) throw IoError(path.string() + ": expected " + std::to_string(rows) + " rows");
    const auto fields = split(line, ',');
    if (fields.size() != cols) {
      throw IoError(path.string() + ": row " + std::to_string(i + 1) + " has " + std::to_string(fields.size()) +
                    " fields, expected " + std::to_string(cols));
    }
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = parse_double(fields[j], path);
  }
  return m;
}

void write_pgm(const fs::path& path, const Frame& img, bool binary) {
  auto out = open_out(path, std::ios::out | std::ios::binary);
  out << (binary ? "P5" : "P2") << '\n' << img.cols() << ' ' << img.rows() << '\n' << 255 << '\n';
  for (std::size_t i = 0; i < img.rows(); ++i) {
    for (std::size_t j = 0; j < img.cols(); ++j) {
      const auto level = static_cast<int>(std::lround(std::clamp(img(i, j), 0.0, 1.0) * 255.0));
      if (binary) {
        out.put(static_cast<char>(level));
      } else {
        out << level << (j + 1 == img.cols() ? '\n' : ' ');
      }
    }
  }
}

Frame read_pgm(const fs::path& path) {
  auto in = open_in(path, std::ios::in | std::ios::binary);
  const std::string magic = pgm_token(in, path);
  if (magic != "P2" && magic != "P5") throw IoError(path.string() + ": not a PGM file (magic " + magic + ")");
  const std::size_t cols = parse_size(pgm_token(in, path), path);
  const std::size_t rows = parse_size(pgm_token(in, path), path);
  const std::size_t maxval = parse_size(pgm_token(in, path), path);
  if (rows == 0 || cols == 0) throw IoError(path.string() + ": empty image");
  if (maxval == 0 || maxval > 65535) throw IoError(path.string() + ": invalid maxval");

  Frame img(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      std::size_t level = 0;
      if (magic == "P2") {
        level = parse_size(pgm_token(in, path), path);
      } else {
        const int hi = in.get();
        if (hi == EOF) throw IoError(path.string() + ": truncated pixel data");
        level = static_cast<unsigned char>(hi);
        if (maxval > 255) {
          const int lo = in.get();
          if (lo == EOF) throw IoError(path.string() + ": truncated pixel data");
          level = (level << 8) | static_cast<unsigned char>(lo);
        }
      }
      if (level > maxval) throw IoError(path.string() + ": pixel value exceeds maxval");
      img(i, j) = static_cast<double>(level) / static_cast<double>(maxval);
    }
  }
  return img;
}

ImageStack read_image_directory(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError(dir.string() + " is not a directory");
  ImageStack stack;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".pgm") stack.files.push_back(entry.path());
  std::ranges::sort(stack.files, [](const fs::path& a, const fs::path& b) {
    return natural_less(a.filename().string(), b.filename().string());
  });
  if (stack.files.empty()) throw IoError(dir.string() + " contains no .pgm images");

  std::vector<Frame> frames;
  for (const auto& f : stack.files) frames.push_back(read_pgm(f));
  stack.rows = frames.front().rows();
  stack.cols = frames.front().cols();
  stack.A = DenseMatrix(stack.rows * stack.cols, frames.size());
  for (std::size_t c = 0; c < frames.size(); ++c) {
    if (frames[c].rows() != stack.rows || frames[c].cols() != stack.cols) {
      throw IoError(stack.files[c].string() + ": image shape differs from " + stack.files.front().string());
    }
    const Vector v = vectorize(frames[c]);
    std::ranges::copy(v, stack.A.col(c).begin());
  }
  return stack;
}

std::vector<HistoryRow> history_rows(const SolveReport& report, int stage) {
  std::vector<HistoryRow> rows;
  for (std::size_t i = 0; i < report.objective_history.size(); ++i)
    rows.push_back({stage, i + 1, report.objective_history[i]});
  return rows;
}

json h_to_json(const GenShiftMatrix& h, std::size_t frame_rows) {
  json entries = json::array();
  for (std::size_t i = 0; i < h.rows(); ++i) {
    for (std::size_t j = 0; j < h.cols(); ++j) {
      for (const auto& t : h(i, j).terms()) {
        const auto [r1, s1] = p_to_shift2d(t.shift, frame_rows);
        entries.push_back({{"image", i}, {"component", j}, {"coeff", t.coeff}, {"shift", t.shift},
                           {"r1", r1}, {"s1", s1}});
      }
    }
  }
  return {{"n", h.ambient()}, {"m", h.rows()}, {"k", h.cols()}, {"entries", std::move(entries)}};
}

GenShiftMatrix h_from_json(const json& j) {
  try {
    const auto n = j.at("n").get<std::size_t>();
    const auto m = j.at("m").get<std::size_t>();
    const auto k = j.at("k").get<std::size_t>();
    std::vector<std::vector<ShiftScale>> terms(m * k);
    for (const auto& e : j.at("entries")) {
      const auto i = e.at("image").get<std::size_t>();
      const auto c = e.at("component").get<std::size_t>();
      if (i >= m || c >= k) throw IoError("H entry index out of range");
      terms[i * k + c].push_back({e.at("coeff").get<double>(), e.at("shift").get<std::size_t>()});
    }
    GenShiftMatrix h(m, k, n);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t c = 0; c < k; ++c) h.set(i, c, GenShiftSum(n, std::move(terms[i * k + c])));
    return h;
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed H record: ") + e.what());
  }
}

void save_archive(const fs::path& dir, const FactorArchive& archive, bool binary_pgm) {
  const auto& w = archive.W;
  if (archive.frame_rows * archive.frame_cols != w.rows()) {
    throw IoError("archive frame shape does not match W rows");
  }
  fs::create_directories(dir / "W");
  write_matrix_csv(dir / "W.csv", w);

  json scales = json::array();
  for (std::size_t j = 0; j < w.cols(); ++j) {
    const auto col = w.col(j);
    const double peak = col.empty() ? 0.0 : *std::ranges::max_element(col);
    Vector scaled(col.begin(), col.end());
    if (peak > 0.0)
      for (double& x : scaled) x /= peak;
    write_pgm(dir / "W" / ("comp_" + std::to_string(j) + ".pgm"),
              devectorize(scaled, archive.frame_rows, archive.frame_cols), binary_pgm);
    scales.push_back(peak);
  }

  json h = h_to_json(archive.H, archive.frame_rows);
  h["kind"] = archive.kind;
  h["frame"] = {{"rows", archive.frame_rows}, {"cols", archive.frame_cols}};
  write_json(dir / "H.json", h);

  {
    auto out = open_out(dir / "history.csv");
    out << "stage,iteration,objective\n";
    for (const auto& r : archive.history) out << r.stage << ',' << r.iteration << ',' << format_double(r.objective) << '\n';
  }

  json config = archive.config;
  config["result"] = {{"kind", archive.kind},
                      {"final_objective", archive.final_objective},
                      {"iterations_used", archive.iterations_used},
                      {"stop_reason", archive.stop_reason},
                      {"image_scales", std::move(scales)},
                      {"frame", {{"rows", archive.frame_rows}, {"cols", archive.frame_cols}}}};
  write_json(dir / "config.json", config);
}

FactorArchive load_archive(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError(dir.string() + " is not an archive directory");
  FactorArchive a;
  a.W = read_matrix_csv(dir / "W.csv");
  const json h = read_json(dir / "H.json");
  a.H = h_from_json(h);
  try {
    a.kind = h.at("kind").get<std::string>();
    a.frame_rows = h.at("frame").at("rows").get<std::size_t>();
    a.frame_cols = h.at("frame").at("cols").get<std::size_t>();
  } catch (const json::exception& e) {
    throw IoError((dir / "H.json").string() + ": " + e.what());
  }
  if (a.H.cols() != a.W.cols() || a.H.ambient() != a.W.rows() || a.frame_rows * a.frame_cols != a.W.rows()) {
    throw IoError(dir.string() + ": W.csv and H.json disagree on shape");
  }

  auto in = open_in(dir / "history.csv");
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 3) throw IoError((dir / "history.csv").string() + ": malformed row");
    a.history.push_back({static_cast<int>(parse_double(f[0], dir / "history.csv")),
                         static_cast<std::size_t>(parse_double(f[1], dir / "history.csv")),
                         parse_double(f[2], dir / "history.csv")});
  }

  a.config = read_json(dir / "config.json");
  try {
    const auto& r = a.config.at("result");
    a.final_objective = r.at("final_objective").get<double>();
    a.iterations_used = r.at("iterations_used").get<std::size_t>();
    a.stop_reason = r.at("stop_reason").get<std::string>();
  } catch (const json::exception& e) {
    throw IoError((dir / "config.json").string() + ": " + e.what());
  }
  a.config.erase("result");
  return a;
}

void save_truth(const fs::path& path, const Dataset& ds) {
  json components = json::array();
  for (const auto& s : ds.components) {
    json rows = json::array();
    for (std::size_t i = 0; i < s.bitmap.rows(); ++i) {
      std::string row;
      for (std::size_t j = 0; j < s.bitmap.cols(); ++j) row.push_back(s.bitmap(i, j) > 0.0 ? '1' : '0');
      rows.push_back(row);
    }
    components.push_back({{"name", s.name}, {"bitmap", rows}});
  }
  json placements = json::array();
  for (const auto& per_image : ds.placements) {
    json list = json::array();
    for (const auto& p : per_image) {
      const auto [r1, s1] = p_to_shift2d(p.shift, ds.rows);
      list.push_back({{"component", p.component}, {"coeff", p.coeff}, {"shift", p.shift}, {"r1", r1}, {"s1", s1}});
    }
    placements.push_back(std::move(list));
  }
  const json truth = {
      {"frame", {{"rows", ds.rows}, {"cols", ds.cols}}},
      {"images", ds.placements.size()},
      {"seed", ds.seed},
      {"noise", {{"distribution", "uniform"}, {"mean", ds.noise_mean}, {"low", 0.0}, {"high", 2.0 * ds.noise_mean},
                 {"clip", {0.0, 1.0}}}},
      {"components", std::move(components)},
      {"placements", std::move(placements)}};
  write_json(path, truth);
}

Dataset load_truth(const fs::path& path) {
  const json j = read_json(path);
  Dataset ds;
  try {
    ds.rows = j.at("frame").at("rows").get<std::size_t>();
    ds.cols = j.at("frame").at("cols").get<std::size_t>();
    ds.seed = j.at("seed").get<std::uint64_t>();
    ds.noise_mean = j.at("noise").at("mean").get<double>();
    for (const auto& c : j.at("components")) {
      std::string text;
      for (const auto& row : c.at("bitmap")) text += row.get<std::string>() + "\n";
      ds.components.push_back(parse_shape(c.at("name").get<std::string>(), text));
    }
    for (const auto& list : j.at("placements")) {
      std::vector<Placement> per_image;
      for (const auto& p : list) {
        per_image.push_back({p.at("component").get<std::size_t>(), p.at("coeff").get<double>(),
                             p.at("shift").get<std::size_t>()});
      }
      ds.placements.push_back(std::move(per_image));
    }
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  return ds;
}

}  // namespace shiftnmf::io
