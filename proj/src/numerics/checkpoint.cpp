#include "vmap/numerics/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace vmap::numerics {

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void save_checkpoint(const std::filesystem::path& path, const std::map<std::string, std::string>& metadata,
                     const ParamStore& params) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw CheckpointError("cannot write checkpoint " + tmp.string());
    out << "vmap-checkpoint " << kCheckpointFormatVersion << '\n';
    for (const auto& [key, value] : metadata) {
      if (key.find_first_of(" \t\n") != std::string::npos || value.find('\n') != std::string::npos) {
        throw CheckpointError("checkpoint metadata must be single-token keys and single-line values");
      }
      out << "meta " << key << ' ' << value << '\n';
    }
    for (const auto& [name, t] : params.entries()) {
      out << "param " << name << ' ' << t.rank();
      for (std::size_t d : t.shape()) out << ' ' << d;
      out << '\n';
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (i) out << ' ';
        out << format_double(t[i]);
      }
      out << '\n';
    }
    out << "end\n";
    if (!out) throw CheckpointError("failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw CheckpointError("empty checkpoint " + path.string());
  {
    std::istringstream head(line);
    std::string magic;
    int version = 0;
    head >> magic >> version;
    if (magic != "vmap-checkpoint") throw CheckpointError("not a checkpoint file: " + path.string());
    if (version != kCheckpointFormatVersion) {
      throw CheckpointError("unsupported checkpoint format version " + std::to_string(version));
    }
  }
  Checkpoint ckpt;
  bool ended = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string kind;
    fields >> kind;
    if (kind == "meta") {
      std::string key;
      fields >> key;
      std::string value;
      std::getline(fields, value);
      if (!value.empty() && value.front() == ' ') value.erase(0, 1);
      ckpt.metadata[key] = value;
    } else if (kind == "param") {
      std::string name;
      std::size_t rank = 0;
      fields >> name >> rank;
      Shape shape(rank);
      for (auto& d : shape) fields >> d;
      if (!fields || rank == 0) throw CheckpointError("malformed param header: " + line);
      Tensor t = ckpt.params.add(name, shape);
      std::string values;
      if (!std::getline(in, values)) throw CheckpointError("missing values for " + name);
      const char* p = values.c_str();
      for (std::size_t i = 0; i < t.size(); ++i) {
        char* end = nullptr;
        t[i] = std::strtod(p, &end);
        if (end == p) throw CheckpointError("too few values for " + name);
        p = end;
      }
    } else if (kind == "end") {
      ended = true;
      break;
    } else {
      throw CheckpointError("unexpected checkpoint line: " + line);
    }
  }
  if (!ended) throw CheckpointError("truncated checkpoint " + path.string());
  return ckpt;
}

}  // namespace vmap::numerics
