#include "fricest/trace.hpp"

#include <cmath>
#include <cstring>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "fricest/io.hpp"

namespace fricest::sim {

namespace {

constexpr char kJournalMagic[4] = {'F', 'R', 'T', 'J'};
constexpr std::uint32_t kJournalVersion = 1;
constexpr int kCsvVersion = 1;

struct StreamDesc {
  const char* name;
  const Eigen::MatrixXd* data;
  Eigen::MatrixXd* mut;
  int cols;      // expected column count, -1 = n_joints, -2 = k*n, -3 = 3n
  bool present;  // whether this trace carries the stream
};

std::vector<StreamDesc> streams(const SimTrace& tr) {
  auto& m = const_cast<SimTrace&>(tr);
  const int n = tr.meta.n_joints;
  const int kf = tr.meta.friction_param_count;
  return {
      {"q", &tr.q, &m.q, n, true},
      {"qd", &tr.qd, &m.qd, n, true},
      {"q_des", &tr.q_des, &m.q_des, n, true},
      {"qd_des", &tr.qd_des, &m.qd_des, n, true},
      {"qdd_des", &tr.qdd_des, &m.qdd_des, n, true},
      {"tau", &tr.tau, &m.tau, n, true},
      {"dist", &tr.disturbance, &m.disturbance, n, true},
      {"s", &tr.s, &m.s, n, tr.meta.has_s},
      {"pi_f_hat", &tr.pi_f_hat, &m.pi_f_hat, kf * n, tr.meta.has_adaptive},
      {"eps", &tr.eps, &m.eps, n, tr.meta.has_adaptive},
      {"eso", &tr.eso, &m.eso, 3 * n, tr.meta.has_eso},
  };
}

void append_u32(std::string& out, std::uint32_t v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof(v));
}
void append_u64(std::string& out, std::uint64_t v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof(v));
}
void append_f64(std::string& out, double v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof(v));
}
void append_str(std::string& out, const std::string& s) {
  append_u32(out, static_cast<std::uint32_t>(s.size()));
  out.append(s);
}

class Reader {
 public:
  explicit Reader(std::string bytes) : bytes_(std::move(bytes)) {}
  std::uint32_t u32() { return read<std::uint32_t>(); }
  std::uint64_t u64() { return read<std::uint64_t>(); }
  double f64() { return read<double>(); }
  std::string str() {
    const std::uint32_t len = u32();
    need(len);
    std::string s = bytes_.substr(pos_, len);
    pos_ += len;
    return s;
  }
  void raw(char* dst, std::size_t len) {
    need(len);
    std::memcpy(dst, bytes_.data() + pos_, len);
    pos_ += len;
  }

 private:
  template <typename T>
  T read() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void need(std::size_t len) {
    if (pos_ + len > bytes_.size()) {
      throw std::runtime_error("truncated trace journal");
    }
  }
  std::string bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void SimTrace::validate() const {
  const Eigen::Index rows = t.size();
  if (meta.n_joints <= 0) throw std::runtime_error("trace has no joints");
  for (const StreamDesc& sd : streams(*this)) {
    if (!sd.present) continue;
    if (sd.data->rows() != rows || sd.data->cols() != sd.cols) {
      throw std::runtime_error(std::string("trace stream '") + sd.name +
                               "' has inconsistent shape");
    }
  }
  for (Eigen::Index k = 1; k < rows; ++k) {
    const double step = t[k] - t[k - 1];
    if (!(step > 0.0) || std::abs(step - meta.control_dt) > 1e-9) {
      throw std::runtime_error("trace time grid is not uniform");
    }
  }
}

void SimTrace::save_csv(const std::filesystem::path& path) const {
  std::string out;
  out += "# fricest-trace csv v" + std::to_string(kCsvVersion) + "\n";
  out += "# controller_id=" + meta.controller_id + "\n";
  out += "# trajectory_id=" + meta.trajectory_id + "\n";
  out += "# config_hash=" + io::hash_hex(meta.config_hash) + "\n";
  out += "# pairing_hash=" + io::hash_hex(meta.pairing_hash) + "\n";
  out += "# seed=" + std::to_string(meta.seed) + "\n";
  out += "# n_joints=" + std::to_string(meta.n_joints) + "\n";
  out += "# friction_param_count=" + std::to_string(meta.friction_param_count) + "\n";
  out += "# control_dt=" + io::format_double(meta.control_dt) + "\n";
  out += "# has_s=" + std::to_string(meta.has_s ? 1 : 0) + "\n";
  out += "# has_adaptive=" + std::to_string(meta.has_adaptive ? 1 : 0) + "\n";
  out += "# has_eso=" + std::to_string(meta.has_eso ? 1 : 0) + "\n";
  out += "# fault=" + std::to_string(meta.fault ? 1 : 0) + "\n";
  out += "# fault_time=" + io::format_double(meta.fault_time) + "\n";
  out += "# saturation_events=" + std::to_string(meta.saturation_events) + "\n";

  out += "t";
  for (const StreamDesc& sd : streams(*this)) {
    if (!sd.present) continue;
    for (int c = 0; c < sd.cols; ++c) {
      out += ",";
      out += sd.name;
      out += "_" + std::to_string(c);
    }
  }
  out += "\n";

  for (Eigen::Index k = 0; k < ticks(); ++k) {
    out += io::format_double(t[k]);
    for (const StreamDesc& sd : streams(*this)) {
      if (!sd.present) continue;
      for (int c = 0; c < sd.cols; ++c) {
        out += ",";
        out += io::format_double((*sd.data)(k, c));
      }
    }
    out += "\n";
  }
  io::atomic_write(path, out);
}

SimTrace SimTrace::load_csv(const std::filesystem::path& path) {
  std::istringstream in(io::read_file(path));
  SimTrace tr;
  std::string line;
  std::vector<std::vector<double>> rows;
  bool header_seen = false;
  auto meta_value = [](const std::string& l) {
    return l.substr(l.find('=') + 1);
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string body = line.substr(2);
      if (body.rfind("controller_id=", 0) == 0) tr.meta.controller_id = meta_value(body);
      else if (body.rfind("trajectory_id=", 0) == 0) tr.meta.trajectory_id = meta_value(body);
      else if (body.rfind("config_hash=", 0) == 0) tr.meta.config_hash = std::stoull(meta_value(body), nullptr, 16);
      else if (body.rfind("pairing_hash=", 0) == 0) tr.meta.pairing_hash = std::stoull(meta_value(body), nullptr, 16);
      else if (body.rfind("seed=", 0) == 0) tr.meta.seed = std::stoull(meta_value(body));
      else if (body.rfind("n_joints=", 0) == 0) tr.meta.n_joints = std::stoi(meta_value(body));
      else if (body.rfind("friction_param_count=", 0) == 0) tr.meta.friction_param_count = std::stoi(meta_value(body));
      else if (body.rfind("control_dt=", 0) == 0) tr.meta.control_dt = std::stod(meta_value(body));
      else if (body.rfind("has_s=", 0) == 0) tr.meta.has_s = meta_value(body) == "1";
      else if (body.rfind("has_adaptive=", 0) == 0) tr.meta.has_adaptive = meta_value(body) == "1";
      else if (body.rfind("has_eso=", 0) == 0) tr.meta.has_eso = meta_value(body) == "1";
      else if (body.rfind("fault=", 0) == 0) tr.meta.fault = meta_value(body) == "1";
      else if (body.rfind("fault_time=", 0) == 0) tr.meta.fault_time = std::stod(meta_value(body));
      else if (body.rfind("saturation_events=", 0) == 0) tr.meta.saturation_events = std::stoi(meta_value(body));
      continue;
    }
    if (!header_seen) {  // column header line
      header_seen = true;
      continue;
    }
    std::vector<double> row;
    std::size_t start = 0;
    while (start <= line.size()) {
      const std::size_t comma = line.find(',', start);
      const std::string field =
          line.substr(start, comma == std::string::npos ? std::string::npos
                                                        : comma - start);
      row.push_back(std::stod(field));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    rows.push_back(std::move(row));
  }

  const Eigen::Index nrows = static_cast<Eigen::Index>(rows.size());
  tr.t.resize(nrows);
  auto descs = streams(tr);
  for (StreamDesc& sd : descs) {
    if (sd.present) sd.mut->resize(nrows, sd.cols);
  }
  for (Eigen::Index k = 0; k < nrows; ++k) {
    const std::vector<double>& row = rows[static_cast<std::size_t>(k)];
    std::size_t idx = 0;
    tr.t[k] = row.at(idx++);
    for (StreamDesc& sd : descs) {
      if (!sd.present) continue;
      for (int c = 0; c < sd.cols; ++c) (*sd.mut)(k, c) = row.at(idx++);
    }
  }
  tr.validate();
  return tr;
}

void SimTrace::save_journal(const std::filesystem::path& path) const {
  std::string out;
  out.append(kJournalMagic, sizeof(kJournalMagic));
  append_u32(out, kJournalVersion);
  append_str(out, meta.controller_id);
  append_str(out, meta.trajectory_id);
  append_u64(out, meta.config_hash);
  append_u64(out, meta.pairing_hash);
  append_u64(out, meta.seed);
  append_u32(out, static_cast<std::uint32_t>(meta.n_joints));
  append_u32(out, static_cast<std::uint32_t>(meta.friction_param_count));
  append_f64(out, meta.control_dt);
  std::uint32_t flags = 0;
  if (meta.has_s) flags |= 1u;
  if (meta.has_adaptive) flags |= 2u;
  if (meta.has_eso) flags |= 4u;
  if (meta.fault) flags |= 8u;
  append_u32(out, flags);
  append_f64(out, meta.fault_time);
  append_u32(out, static_cast<std::uint32_t>(meta.saturation_events));
  append_u64(out, static_cast<std::uint64_t>(ticks()));
  out.append(reinterpret_cast<const char*>(t.data()),
             static_cast<std::size_t>(t.size()) * sizeof(double));
  for (const StreamDesc& sd : streams(*this)) {
    if (!sd.present) continue;
    out.append(reinterpret_cast<const char*>(sd.data->data()),
               static_cast<std::size_t>(sd.data->size()) * sizeof(double));
  }
  io::atomic_write(path, out);
}

SimTrace SimTrace::load_journal(const std::filesystem::path& path) {
  Reader r(io::read_file(path));
  char magic[4];
  r.raw(magic, sizeof(magic));
  if (std::memcmp(magic, kJournalMagic, sizeof(magic)) != 0) {
    throw std::runtime_error("not a trace journal: " + path.string());
  }
  const std::uint32_t version = r.u32();
  if (version != kJournalVersion) {
    throw std::runtime_error("unsupported trace journal version " +
                             std::to_string(version));
  }
  SimTrace tr;
  tr.meta.controller_id = r.str();
  tr.meta.trajectory_id = r.str();
  tr.meta.config_hash = r.u64();
  tr.meta.pairing_hash = r.u64();
  tr.meta.seed = r.u64();
  tr.meta.n_joints = static_cast<int>(r.u32());
  tr.meta.friction_param_count = static_cast<int>(r.u32());
  tr.meta.control_dt = r.f64();
  const std::uint32_t flags = r.u32();
  tr.meta.has_s = (flags & 1u) != 0;
  tr.meta.has_adaptive = (flags & 2u) != 0;
  tr.meta.has_eso = (flags & 4u) != 0;
  tr.meta.fault = (flags & 8u) != 0;
  tr.meta.fault_time = r.f64();
  tr.meta.saturation_events = static_cast<int>(r.u32());
  const Eigen::Index nrows = static_cast<Eigen::Index>(r.u64());
  tr.t.resize(nrows);
  r.raw(reinterpret_cast<char*>(tr.t.data()),
        static_cast<std::size_t>(nrows) * sizeof(double));
  for (StreamDesc& sd : streams(tr)) {
    if (!sd.present) continue;
    sd.mut->resize(nrows, sd.cols);
    r.raw(reinterpret_cast<char*>(sd.mut->data()),
          static_cast<std::size_t>(sd.mut->size()) * sizeof(double));
  }
  tr.validate();
  return tr;
}

}  // namespace fricest::sim
