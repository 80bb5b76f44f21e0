#include "inertia/nn/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "inertia/common/crc32.hpp"
#include "inertia/common/error.hpp"

namespace inertia::nn {
namespace {

constexpr const char* kMagic = "inertia-checkpoint 1";

std::string encode(const Tensor& t) {
  std::string bytes;
  bytes.reserve(t.size() * 8);
  for (double v : t.data) {
    const auto u = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<char>((u >> (8 * i)) & 0xFFU));
  }
  return bytes;
}

std::uint32_t crc(const std::string& bytes) {
  return crc32({reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()});
}

Shape parse_shape(const std::string& s) {
  Shape out;
  if (s == "scalar") return out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const auto next = s.find('x', pos);
    const std::string part = s.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
    try {
      std::size_t used = 0;
      out.push_back(std::stoull(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw DataError("checkpoint: bad shape '" + s + "'");
    }
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return out;
}

std::string shape_token(const Shape& s) {
  if (s.empty()) return "scalar";
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "x" : "") + std::to_string(s[i]);
  return out;
}

}  // namespace

const std::string& Checkpoint::get(const std::string& key) const {
  for (const auto& [k, v] : header)
    if (k == key) return v;
  throw DataError("checkpoint: header key '" + key + "' missing");
}

bool Checkpoint::has(const std::string& key) const {
  for (const auto& kv : header)
    if (kv.first == key) return true;
  return false;
}

void Checkpoint::set(const std::string& key, std::string value) {
  for (auto& [k, v] : header)
    if (k == key) {
      v = std::move(value);
      return;
    }
  header.emplace_back(key, std::move(value));
}

void write_checkpoint(std::ostream& os, const Checkpoint& ck) {
  os << kMagic << '\n';
  for (const auto& [k, v] : ck.header) {
    require(!k.empty() && k.find_first_of(" \n") == std::string::npos && k != "tensor" && k != "end",
            "checkpoint: invalid header key '" + k + "'");
    require(v.find('\n') == std::string::npos, "checkpoint: header values must be single-line");
    os << k << ' ' << v << '\n';
  }
  std::vector<std::string> payloads;
  for (const auto& [name, t] : ck.tensors) {
    require(!name.empty() && name.find_first_of(" \n") == std::string::npos, "checkpoint: invalid tensor name");
    payloads.push_back(encode(t));
    char hex[9];
    std::snprintf(hex, sizeof(hex), "%08x", crc(payloads.back()));
    os << "tensor " << name << ' ' << shape_token(t.shape) << ' ' << hex << '\n';
  }
  os << "end\n";
  for (const auto& p : payloads) os.write(p.data(), static_cast<std::streamsize>(p.size()));
  if (!os) throw DataError("checkpoint: write failed");
}

Checkpoint read_checkpoint(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kMagic) throw DataError("checkpoint: bad magic or unsupported version");
  Checkpoint ck;
  std::vector<std::uint32_t> crcs;
  bool ended = false;
  while (std::getline(is, line)) {
    if (line == "end") {
      ended = true;
      break;
    }
    const auto sp = line.find(' ');
    const std::string key = line.substr(0, sp);
    const std::string value = sp == std::string::npos ? "" : line.substr(sp + 1);
    if (key == "tensor") {
      std::istringstream ls(value);
      std::string name, shape, hex;
      if (!(ls >> name >> shape >> hex)) throw DataError("checkpoint: malformed tensor line '" + line + "'");
      Tensor t(parse_shape(shape));
      ck.tensors.emplace_back(name, std::move(t));
      try {
        crcs.push_back(static_cast<std::uint32_t>(std::stoul(hex, nullptr, 16)));
      } catch (const std::exception&) {
        throw DataError("checkpoint: bad checksum field '" + hex + "'");
      }
    } else {
      ck.header.emplace_back(key, value);
    }
  }
  if (!ended) throw DataError("checkpoint: header not terminated");
  for (std::size_t i = 0; i < ck.tensors.size(); ++i) {
    Tensor& t = ck.tensors[i].second;
    std::string bytes(t.size() * 8, '\0');
    is.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (static_cast<std::size_t>(is.gcount()) != bytes.size())
      throw DataError("checkpoint: payload truncated in tensor '" + ck.tensors[i].first + "'");
    if (crc(bytes) != crcs[i]) throw DataError("checkpoint: checksum failure in tensor '" + ck.tensors[i].first + "'");
    for (std::size_t k = 0; k < t.size(); ++k) {
      std::uint64_t u = 0;
      for (int b = 0; b < 8; ++b) u |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[k * 8 + b])) << (8 * b);
      t.data[k] = std::bit_cast<double>(u);
    }
  }
  if (is.peek() != std::char_traits<char>::eof()) throw DataError("checkpoint: trailing bytes after payload");
  return ck;
}

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot write " + path.string());
  write_checkpoint(os, ck);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot read " + path.string());
  return read_checkpoint(is);
}

}  // namespace inertia::nn
