#include "hgl/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <vector>

namespace hgl {
namespace {

void put_le64(std::string& out, double value) {
  auto bits = std::bit_cast<std::uint64_t>(value);
  for (int b = 0; b < 8; ++b) {
    out.push_back(static_cast<char>(bits & 0xffu));
    bits >>= 8;
  }
}

double get_le64(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int b = 7; b >= 0; --b) bits = (bits << 8) | p[b];
  return std::bit_cast<double>(bits);
}

bool has_space(const std::string& s) { return s.find_first_of(" \t\r\n") != std::string::npos; }

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ParameterStore& params,
                     const std::map<std::string, std::string>& meta) {
  std::ostringstream header;
  header << "HGLCKPT 1\n";
  for (const auto& [key, value] : meta) {
    if (key.empty() || has_space(key) || value.find('\n') != std::string::npos) {
      throw CheckpointError("checkpoint meta entry '" + key + "' is not representable");
    }
    header << "meta " << key << ' ' << value << '\n';
  }
  std::string payload;
  for (const auto& [name, entry] : params) {
    if (has_space(name)) throw CheckpointError("parameter name with whitespace: '" + name + "'");
    header << "param " << name << ' ' << entry.value.rank();
    for (auto d : entry.value.shape()) header << ' ' << d;
    header << ' ' << payload.size() << '\n';
    for (double v : entry.value.data()) put_le64(payload, v);
  }
  header << "data " << payload.size() << '\n';

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open checkpoint for writing: " + path.string());
  const std::string h = header.str();
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw CheckpointError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path.string());

  struct Pending {
    std::string name;
    Shape shape;
    std::size_t offset;
  };
  std::vector<Pending> pending;
  Checkpoint ckpt;
  std::string line;
  std::size_t line_no = 0;
  std::size_t data_bytes = 0;
  bool saw_data = false;
  auto fail = [&](const std::string& why) {
    throw CheckpointError(path.string() + ":" + std::to_string(line_no) + ": " + why);
  };

  while (!saw_data && std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (line_no == 1) {
      int version = 0;
      ls >> version;
      if (tag != "HGLCKPT" || version != 1) fail("not an HGL checkpoint");
    } else if (tag == "meta") {
      std::string key;
      ls >> key;
      std::string value;
      std::getline(ls >> std::ws, value);
      ckpt.meta[key] = value;
    } else if (tag == "param") {
      Pending p;
      std::size_t rank = 0;
      if (!(ls >> p.name >> rank)) fail("malformed param line");
      p.shape.resize(rank);
      for (auto& d : p.shape)
        if (!(ls >> d)) fail("malformed shape for " + p.name);
      if (!(ls >> p.offset)) fail("missing offset for " + p.name);
      pending.push_back(std::move(p));
    } else if (tag == "data") {
      if (!(ls >> data_bytes)) fail("malformed data line");
      saw_data = true;
    } else {
      fail("unexpected header line '" + line + "'");
    }
  }
  if (!saw_data) throw CheckpointError(path.string() + ": truncated header");

  std::vector<unsigned char> payload(data_bytes);
  in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(data_bytes));
  if (static_cast<std::size_t>(in.gcount()) != data_bytes) {
    throw CheckpointError(path.string() + ": payload shorter than " + std::to_string(data_bytes) + " bytes");
  }
  for (const auto& p : pending) {
    const std::size_t n = shape_product(p.shape);
    if (p.offset + n * 8 > data_bytes) throw CheckpointError(path.string() + ": " + p.name + " overruns payload");
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) values[i] = get_le64(payload.data() + p.offset + 8 * i);
    ckpt.params.add(p.name, Tensor(p.shape, std::move(values)));
  }
  return ckpt;
}

void assign_parameters(ParameterStore& target, const ParameterStore& source) {
  if (target.size() != source.size()) {
    throw CheckpointError("checkpoint has " + std::to_string(source.size()) + " parameters, model expects " +
                          std::to_string(target.size()));
  }
  for (auto& [name, entry] : target) {
    if (!source.contains(name)) throw CheckpointError("checkpoint is missing parameter " + name);
    const Tensor& src = source.value(name);
    if (src.shape() != entry.value.shape()) {
      throw CheckpointError("parameter " + name + " has shape " + shape_to_string(src.shape()) + " in checkpoint, " +
                            shape_to_string(entry.value.shape()) + " in model");
    }
    entry.value = src;
  }
}

}  // namespace hgl
