#include "inertia/estimators/model.hpp"

#include <charconv>
#include <sstream>

#include "inertia/common/error.hpp"
#include "inertia/common/rng.hpp"

namespace inertia::estimators {
namespace {

std::size_t conv_len(std::size_t len, std::size_t k) { return len >= k ? len - k + 1 : 0; }

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s.empty() ? "-" : s;
}

std::size_t parse_size(const std::string& s, const std::string& key) {
  std::size_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) throw DataError("checkpoint: bad value for " + key + ": " + s);
  return v;
}

std::vector<std::size_t> parse_sizes(const std::string& s, const std::string& key) {
  std::vector<std::size_t> out;
  if (s == "-") return out;
  std::istringstream is(s);
  std::string tok;
  while (std::getline(is, tok, ',')) out.push_back(parse_size(tok, key));
  return out;
}

}  // namespace

std::string_view family_name(Family f) {
  switch (f) {
    case Family::kDnn: return "dnn";
    case Family::kCnn: return "cnn";
    case Family::kLrcn: return "lrcn";
    case Family::kGcn: return "gcn";
  }
  return "?";
}

Family parse_family(std::string_view s) {
  for (Family f : kAllFamilies)
    if (family_name(f) == s) return f;
  std::string up(s);
  for (char& c : up) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  for (Family f : kAllFamilies)
    if (family_name(f) == up) return f;
  throw InvalidArgument("unknown model family '" + std::string(s) + "' (expected dnn, cnn, lrcn or gcn)");
}

ModelSpec default_spec(Family family, std::size_t n_buses, std::size_t n_features, std::size_t n_steps,
                       std::uint64_t seed) {
  ModelSpec s;
  s.family = family;
  s.n_buses = n_buses;
  s.n_features = n_features;
  s.n_steps = n_steps;
  s.seed = seed;
  switch (family) {
    case Family::kDnn: s.dense_hidden = {128, 64}; break;
    case Family::kCnn: s.dense_hidden = {64}; break;
    case Family::kLrcn: s.dense_hidden = {64, 32}; break;
    case Family::kGcn: s.dense_hidden = {64, 128}; break;
  }
  return s;
}

ModelSpec default_spec(Family family, const signal::Dataset& ds, std::uint64_t seed) {
  require(!ds.samples.empty(), "default_spec: empty dataset");
  const auto& s0 = ds.samples.front();
  ModelSpec s = default_spec(family, s0.n_buses, s0.n_features, s0.n_steps, seed);
  s.edges = ds.info.edges;
  return s;
}

nn::Shape input_shape(const ModelSpec& s) {
  switch (s.family) {
    case Family::kDnn: return {s.n_buses * s.n_features * s.n_steps};
    case Family::kCnn:
    case Family::kLrcn: return {s.n_buses * s.n_features, s.n_steps};
    case Family::kGcn: return {s.n_buses, s.n_features * s.n_steps};
  }
  return {};
}

void validate(const ModelSpec& s) {
  require(s.n_buses > 0 && s.n_features > 0 && s.n_steps > 0, "model spec: input shape must be positive");
  for (std::size_t h : s.dense_hidden) require(h > 0, "model spec: hidden sizes must be positive");
  if (s.family == Family::kCnn || s.family == Family::kLrcn) {
    require(s.conv1 > 0 && s.conv2 > 0 && s.kernel1 > 0 && s.kernel2 > 0 && s.pool > 0,
            "model spec: convolution sizes must be positive");
    const std::size_t l1 = conv_len(s.n_steps, s.kernel1) / s.pool;
    const std::size_t l2 = conv_len(l1, s.kernel2) / s.pool;
    require(l2 > 0, "model spec: " + std::to_string(s.n_steps) + " time steps are too few for the " +
                        std::string(family_name(s.family)) + " convolution stack");
    if (s.family == Family::kLrcn) require(s.lstm_units > 0, "model spec: LSTM units must be positive");
  }
  if (s.family == Family::kGcn) {
    require(s.gcn_hidden > 0, "model spec: GCN hidden size must be positive");
    for (auto [a, b] : s.edges)
      require(a >= 0 && b >= 0 && static_cast<std::size_t>(a) < s.n_buses && static_cast<std::size_t>(b) < s.n_buses &&
                  a != b,
              "model spec: GCN edge out of range");
  }
}

nn::Sequential build_model(const ModelSpec& s) {
  using namespace nn;
  validate(s);
  Sequential m(input_shape(s));
  std::size_t width = 0;
  switch (s.family) {
    case Family::kDnn:
      width = s.n_buses * s.n_features * s.n_steps;
      break;
    case Family::kCnn:
    case Family::kLrcn: {
      m.emplace<Conv1d>(s.n_buses * s.n_features, s.conv1, s.kernel1);
      m.emplace<Relu>();
      m.emplace<MaxPool1d>(s.pool);
      m.emplace<Conv1d>(s.conv1, s.conv2, s.kernel2);
      m.emplace<Relu>();
      m.emplace<MaxPool1d>(s.pool);
      const Shape feat = m.output_shape();
      if (s.family == Family::kCnn) {
        width = feat[0] * feat[1];
        m.emplace<Reshape>(Shape{width});
      } else {
        m.emplace<Transpose>();
        m.emplace<Recurrent>(s.conv2, s.lstm_units, s.cell);
        width = s.lstm_units;
      }
      break;
    }
    case Family::kGcn:
      m.emplace<GraphConv>(renormalized_adjacency(s.n_buses, s.edges), s.n_features * s.n_steps, s.gcn_hidden);
      m.emplace<MeanReadout>();
      width = s.gcn_hidden;
      break;
  }
  for (std::size_t h : s.dense_hidden) {
    m.emplace<Dense>(width, h);
    m.emplace<Relu>();
    width = h;
  }
  m.emplace<Dense>(width, 1);
  m.init(derive_seed(s.seed, SeedStream::kInit));
  return m;
}

void write_spec(nn::Checkpoint& ck, const ModelSpec& s) {
  ck.set("family", std::string(family_name(s.family)));
  ck.set("input", std::to_string(s.n_buses) + " " + std::to_string(s.n_features) + " " + std::to_string(s.n_steps));
  ck.set("conv", join({s.conv1, s.conv2, s.kernel1, s.kernel2, s.pool}));
  ck.set("lstm_units", std::to_string(s.lstm_units));
  ck.set("cell", s.cell == nn::CellType::kLstm ? "lstm" : "mgu");
  ck.set("gcn_hidden", std::to_string(s.gcn_hidden));
  ck.set("dense_hidden", join(s.dense_hidden));
  std::string e;
  for (auto [a, b] : s.edges) e += (e.empty() ? "" : " ") + std::to_string(a) + "-" + std::to_string(b);
  ck.set("edges", e.empty() ? "-" : e);
  ck.set("seed", std::to_string(s.seed));
}

ModelSpec read_spec(const nn::Checkpoint& ck) {
  ModelSpec s;
  try {
    s.family = parse_family(ck.get("family"));
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }
  {
    std::istringstream is(ck.get("input"));
    if (!(is >> s.n_buses >> s.n_features >> s.n_steps)) throw DataError("checkpoint: bad input shape");
  }
  const auto conv = parse_sizes(ck.get("conv"), "conv");
  if (conv.size() != 5) throw DataError("checkpoint: bad conv entry");
  s.conv1 = conv[0];
  s.conv2 = conv[1];
  s.kernel1 = conv[2];
  s.kernel2 = conv[3];
  s.pool = conv[4];
  s.lstm_units = parse_size(ck.get("lstm_units"), "lstm_units");
  const auto& cell = ck.get("cell");
  if (cell != "lstm" && cell != "mgu") throw DataError("checkpoint: bad cell type " + cell);
  s.cell = cell == "lstm" ? nn::CellType::kLstm : nn::CellType::kMinimalGated;
  s.gcn_hidden = parse_size(ck.get("gcn_hidden"), "gcn_hidden");
  s.dense_hidden = parse_sizes(ck.get("dense_hidden"), "dense_hidden");
  const auto& e = ck.get("edges");
  if (e != "-") {
    std::istringstream is(e);
    std::string tok;
    while (is >> tok) {
      const auto dash = tok.find('-');
      if (dash == std::string::npos) throw DataError("checkpoint: bad edge " + tok);
      s.edges.emplace_back(static_cast<int>(parse_size(tok.substr(0, dash), "edges")),
                           static_cast<int>(parse_size(tok.substr(dash + 1), "edges")));
    }
  }
  s.seed = std::stoull(ck.get("seed"));
  try {
    validate(s);
  } catch (const InvalidArgument& ex) {
    throw DataError(std::string("checkpoint: ") + ex.what());
  }
  return s;
}

}  // namespace inertia::estimators
