#pragma once

// File formats:
//
//   DIMACS max-flow   general s-t instances, folded into cut form
//   PCUT1             native grid format, binary (little-endian) or text
//   PCUTDUAL1         dual-state snapshots for warm starts
//   CSV               per-check solver traces
//
// All writers round-trip bit-exactly through their readers.

#include <array>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "paracut/decompose.hpp"
#include "paracut/graph.hpp"
#include "paracut/solvers.hpp"

namespace paracut {

// ---------------------------------------------------------------------------
// Text helpers

namespace detail {

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) throw io_error("cannot format number");
  return std::string(buf.data(), end);
}

inline std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<std::uint64_t> parse_uint(std::string_view s) {
  std::uint64_t v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open '" + path + "'");
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw io_error("error reading '" + path + "'");
  return data;
}

inline void write_file(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot create '" + path + "'");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  out.flush();
  if (!out) throw io_error("error writing '" + path + "'");
}

inline std::string dims_string(const std::vector<std::size_t>& dims) {
  std::string s;
  for (std::size_t k = 0; k < dims.size(); ++k) {
    if (k) s += 'x';
    s += std::to_string(dims[k]);
  }
  return s;
}

inline std::vector<std::size_t> parse_dims(std::string_view s) {
  std::vector<std::size_t> dims;
  std::size_t start = 0;
  while (true) {
    const std::size_t x = s.find('x', start);
    auto part = s.substr(start, x == std::string_view::npos ? std::string_view::npos : x - start);
    auto v = parse_uint(part);
    if (!v || *v == 0) throw invalid_input("bad grid dimensions '" + std::string(s) + "'");
    dims.push_back(static_cast<std::size_t>(*v));
    if (x == std::string_view::npos) break;
    start = x + 1;
  }
  return dims;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// General cut instances and DIMACS

/// An s-t cut instance in folded form. For a labeling x (1 = source side) its
/// cut capacity is
///
///   sum_i source_i (1 - x_i) + sum_i sink_i x_i + sum_ij a_ij |x_i - x_j| + offset
///   = energy(graph(), x) + sum_i source_i + offset.
struct CutInstance {
  std::size_t n = 0;
  std::vector<double> source;
  std::vector<double> sink;
  std::vector<Edge> edges;  // symmetric part, i < j, sorted
  double offset = 0.0;
  std::optional<GridShape> grid;  // present when the file declares grid layout

  CutGraph graph() const {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = source[i] - sink[i];
    return CutGraph(n, std::move(w), edges);
  }
  double constant() const {
    double c = offset;
    for (double v : source) c += v;
    return c;
  }
  double cut_capacity(std::span<const std::uint8_t> x) const { return energy(graph(), x) + constant(); }

  GridEnergy to_grid(const GridShape& shape) const {
    if (shape.size() != n) {
      throw invalid_input("grid " + shape.describe() + " has " + std::to_string(shape.size()) +
                          " nodes but the instance has " + std::to_string(n));
    }
    return GridEnergy(shape, graph());
  }

  static CutInstance from_grid(const GridEnergy& g) {
    CutInstance inst;
    inst.n = g.size();
    inst.source.assign(g.size(), 0.0);
    inst.sink.assign(g.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double w = g.unary()[i];
      if (w > 0.0) inst.source[i] = w;
      if (w < 0.0) inst.sink[i] = -w;
    }
    inst.edges.assign(g.edges().begin(), g.edges().end());
    inst.grid = g.shape();
    return inst;
  }

  friend bool operator==(const CutInstance& a, const CutInstance& b) {
    return a.n == b.n && a.source == b.source && a.sink == b.sink && a.edges == b.edges && a.offset == b.offset &&
           a.grid.has_value() == b.grid.has_value() && (!a.grid || *a.grid == *b.grid);
  }
};

inline constexpr std::string_view kGridHint = "paracut-grid";
inline constexpr std::string_view kOffsetHint = "paracut-offset";

/// Parses DIMACS max-flow text. Arc u->v and v->u between inner nodes fold
/// into a symmetric weight a = (c_uv + c_vu) / 2 plus the linear remainder
/// (c_uv - c_vu)/2 * (x_u - x_v), which lands on the terminal capacities and
/// the offset. The cut function is preserved exactly.
inline CutInstance parse_dimacs(std::string_view text, const std::string& origin = "<dimacs>") {
  auto fail = [&](std::size_t line, const std::string& what) -> io_error {
    return io_error(origin + ":" + std::to_string(line) + ": " + what);
  };

  std::size_t declared_nodes = 0, declared_arcs = 0, arcs_seen = 0;
  bool have_problem = false;
  std::size_t s_id = 0, t_id = 0;  // 1-based, 0 = unset
  struct RawArc {
    std::size_t u, v;
    double cap;
    std::size_t line;
  };
  std::vector<RawArc> arcs;
  std::optional<GridShape> grid;
  std::optional<double> hinted_offset;

  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++lineno;
    auto tok = detail::split_ws(line);
    if (tok.empty()) continue;
    const auto kind = tok[0];
    if (kind == "c") {
      if (tok.size() >= 2 && tok[1] == kGridHint) {
        try {
          std::vector<std::size_t> dims;
          std::optional<Connectivity> conn;
          for (std::size_t k = 2; k < tok.size(); ++k) {
            auto kv = tok[k];
            if (kv.starts_with("dims=")) dims = detail::parse_dims(kv.substr(5));
            if (kv.starts_with("connectivity=")) conn = parse_connectivity(std::string(kv.substr(13)));
          }
          if (dims.empty() || !conn) throw fail(lineno, "incomplete grid hint");
          grid = GridShape(dims, *conn);
        } catch (const invalid_input& e) {
          throw fail(lineno, std::string("bad grid hint: ") + e.what());
        }
      } else if (tok.size() == 3 && tok[1] == kOffsetHint) {
        hinted_offset = detail::parse_double(tok[2]);
        if (!hinted_offset) throw fail(lineno, "bad offset hint");
      }
      continue;
    }
    if (kind == "p") {
      if (have_problem) throw fail(lineno, "duplicate problem line");
      if (tok.size() != 4 || tok[1] != "max") throw fail(lineno, "expected 'p max <nodes> <arcs>'");
      auto nn = detail::parse_uint(tok[2]);
      auto na = detail::parse_uint(tok[3]);
      if (!nn || !na || *nn < 2) throw fail(lineno, "malformed problem line");
      declared_nodes = static_cast<std::size_t>(*nn);
      declared_arcs = static_cast<std::size_t>(*na);
      have_problem = true;
      continue;
    }
    if (!have_problem) throw fail(lineno, "'" + std::string(kind) + "' line before the problem line");
    if (kind == "n") {
      if (tok.size() != 3) throw fail(lineno, "expected 'n <id> s|t'");
      auto id = detail::parse_uint(tok[1]);
      if (!id || *id < 1 || *id > declared_nodes) throw fail(lineno, "node id out of range");
      if (tok[2] == "s") {
        if (s_id) throw fail(lineno, "second source");
        s_id = static_cast<std::size_t>(*id);
      } else if (tok[2] == "t") {
        if (t_id) throw fail(lineno, "second sink");
        t_id = static_cast<std::size_t>(*id);
      } else {
        throw fail(lineno, "node designator must be 's' or 't'");
      }
      continue;
    }
    if (kind == "a") {
      if (tok.size() != 4) throw fail(lineno, "expected 'a <u> <v> <cap>'");
      auto u = detail::parse_uint(tok[1]);
      auto v = detail::parse_uint(tok[2]);
      auto cap = detail::parse_double(tok[3]);
      if (!u || !v || *u < 1 || *v < 1 || *u > declared_nodes || *v > declared_nodes) {
        throw fail(lineno, "arc endpoint out of range");
      }
      if (!cap || !std::isfinite(*cap)) throw fail(lineno, "malformed capacity");
      if (*cap < 0.0) throw fail(lineno, "negative capacity");
      arcs.push_back({static_cast<std::size_t>(*u), static_cast<std::size_t>(*v), *cap, lineno});
      ++arcs_seen;
      continue;
    }
    throw fail(lineno, "unknown line type '" + std::string(kind) + "'");
  }
  if (!have_problem) throw io_error(origin + ": missing problem line");
  if (!s_id || !t_id) throw io_error(origin + ": source or sink not declared");
  if (s_id == t_id) throw io_error(origin + ": source and sink coincide");
  if (arcs_seen != declared_arcs) {
    throw io_error(origin + ": problem line declares " + std::to_string(declared_arcs) + " arcs, found " +
                   std::to_string(arcs_seen));
  }

  // Inner nodes keep their relative order, skipping s and t.
  auto inner = [&](std::size_t id) { return id - 1 - (id > s_id ? 1 : 0) - (id > t_id ? 1 : 0); };
  CutInstance inst;
  inst.n = declared_nodes - 2;
  inst.source.assign(inst.n, 0.0);
  inst.sink.assign(inst.n, 0.0);
  std::map<std::pair<std::size_t, std::size_t>, std::array<double, 2>> pair_caps;  // (lo, hi) -> {lo->hi, hi->lo}
  for (const auto& a : arcs) {
    if (a.v == s_id) throw fail(a.line, "arc into the source");
    if (a.u == t_id) throw fail(a.line, "arc out of the sink");
    if (a.u == s_id && a.v == t_id) {
      inst.offset += a.cap;
    } else if (a.u == s_id) {
      inst.source[inner(a.v)] += a.cap;
    } else if (a.v == t_id) {
      inst.sink[inner(a.u)] += a.cap;
    } else if (a.u != a.v) {
      const std::size_t u = inner(a.u), v = inner(a.v);
      auto& caps = pair_caps[{std::min(u, v), std::max(u, v)}];
      caps[u < v ? 0 : 1] += a.cap;
    }
  }
  for (const auto& [key, caps] : pair_caps) {
    const auto [lo, hi] = key;
    const double a = 0.5 * (caps[0] + caps[1]);
    const double half = 0.5 * (caps[0] - caps[1]);
    // half * (x_lo - x_hi): a sink term on lo and a source term on hi.
    if (half > 0.0) {
      inst.sink[lo] += half;
      inst.source[hi] += half;
      inst.offset -= half;
    } else if (half < 0.0) {
      inst.source[lo] -= half;
      inst.sink[hi] -= half;
      inst.offset += half;
    }
    if (a > 0.0) inst.edges.push_back({static_cast<index_t>(lo), static_cast<index_t>(hi), a});
  }
  if (hinted_offset) inst.offset += *hinted_offset;
  if (grid) {
    if (grid->size() != inst.n) throw io_error(origin + ": grid hint does not match the node count");
    inst.grid = grid;
  }
  return inst;
}

inline CutInstance read_dimacs(const std::string& path) { return parse_dimacs(detail::read_file(path), path); }

/// Inner nodes get ids 1..n, the source n+1 and the sink n+2. A positive
/// offset becomes an s->t arc; a negative one is kept in a comment.
inline std::string format_dimacs(const CutInstance& inst) {
  std::size_t count = 2 * inst.edges.size() + (inst.offset > 0.0 ? 1 : 0);
  for (std::size_t i = 0; i < inst.n; ++i) count += (inst.source[i] != 0.0) + (inst.sink[i] != 0.0);
  const std::size_t s = inst.n + 1, t = inst.n + 2;
  std::string out;
  if (inst.grid) {
    out += "c " + std::string(kGridHint) + " dims=" + detail::dims_string(inst.grid->dims()) +
           " connectivity=" + to_string(inst.grid->connectivity()) + "\n";
  }
  if (inst.offset < 0.0) out += "c " + std::string(kOffsetHint) + " " + detail::format_double(inst.offset) + "\n";
  out += "p max " + std::to_string(inst.n + 2) + " " + std::to_string(count) + "\n";
  out += "n " + std::to_string(s) + " s\nn " + std::to_string(t) + " t\n";
  if (inst.offset > 0.0) out += "a " + std::to_string(s) + " " + std::to_string(t) + " " +
                                detail::format_double(inst.offset) + "\n";
  for (std::size_t i = 0; i < inst.n; ++i) {
    if (inst.source[i] != 0.0) {
      out += "a " + std::to_string(s) + " " + std::to_string(i + 1) + " " + detail::format_double(inst.source[i]) + "\n";
    }
    if (inst.sink[i] != 0.0) {
      out += "a " + std::to_string(i + 1) + " " + std::to_string(t) + " " + detail::format_double(inst.sink[i]) + "\n";
    }
  }
  for (const auto& e : inst.edges) {
    const auto w = detail::format_double(e.weight);
    out += "a " + std::to_string(e.i + 1) + " " + std::to_string(e.j + 1) + " " + w + "\n";
    out += "a " + std::to_string(e.j + 1) + " " + std::to_string(e.i + 1) + " " + w + "\n";
  }
  return out;
}

inline void write_dimacs(const CutInstance& inst, const std::string& path) {
  detail::write_file(path, format_dimacs(inst));
}

// ---------------------------------------------------------------------------
// PCUT1 grid format
//
// Binary: "PCUT1B", u8 ndims, u8 connectivity (0 = 2D-4, 1 = 2D-8, 2 = 3D-6),
// ndims x u64 dims, then f64 unary[n] and, per neighbor direction in storage
// order, f64 weights for every node that has a neighbor that way (index
// order). Text: first line "PCUT1 text", then "dims", "connectivity",
// "unary" and one "direction k" line per direction, values space-separated.

inline constexpr std::string_view kGridMagic = "PCUT1";

namespace detail {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { data_.push_back(static_cast<char>(v)); }
  void u64(std::uint64_t v) {
    if constexpr (std::endian::native == std::endian::big) v = byteswap(v);
    char b[8];
    std::memcpy(b, &v, 8);
    data_.append(b, 8);
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void bytes(std::string_view s) { data_.append(s); }
  std::string take() { return std::move(data_); }

  static std::uint64_t byteswap(std::uint64_t v) {
    std::uint64_t r = 0;
    for (int k = 0; k < 8; ++k) r = (r << 8) | ((v >> (8 * k)) & 0xFF);
    return r;
  }

 private:
  std::string data_;
};

class ByteReader {
 public:
  ByteReader(std::string_view data, std::string origin) : data_(data), origin_(std::move(origin)) {}

  void need(std::size_t k) const {
    if (data_.size() - pos_ < k) throw io_error(origin_ + ": truncated file");
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    std::memcpy(&v, data_.data() + pos_, 8);
    pos_ += 8;
    if constexpr (std::endian::native == std::endian::big) v = ByteWriter::byteswap(v);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string_view bytes(std::size_t k) {
    need(k);
    auto s = data_.substr(pos_, k);
    pos_ += k;
    return s;
  }
  std::size_t remaining() const { return data_.size() - pos_; }
  const std::string& origin() const { return origin_; }

 private:
  std::string_view data_;
  std::size_t pos_ = 0;
  std::string origin_;
};

inline std::uint8_t connectivity_code(Connectivity c) { return static_cast<std::uint8_t>(c); }

inline Connectivity connectivity_from_code(std::uint8_t c, const std::string& origin) {
  if (c > 2) throw io_error(origin + ": unknown connectivity code " + std::to_string(c));
  return static_cast<Connectivity>(c);
}

inline GridEnergy build_grid(const GridShape& shape, std::vector<double> unary,
                             const std::vector<std::vector<double>>& weights, const std::string& origin) {
  try {
    return GridEnergy::from_direction_weights(shape, std::move(unary), weights);
  } catch (const invalid_input& e) {
    throw io_error(origin + ": " + e.what());
  }
}

}  // namespace detail

inline std::string format_grid_binary(const GridEnergy& g) {
  detail::ByteWriter out;
  out.bytes(kGridMagic);
  out.bytes("B");
  const auto dims = g.shape().dims();
  out.u8(static_cast<std::uint8_t>(dims.size()));
  out.u8(detail::connectivity_code(g.shape().connectivity()));
  for (auto d : dims) out.u64(d);
  for (double w : g.unary()) out.f64(w);
  for (const auto& dir : g.direction_weights()) {
    for (double a : dir) out.f64(a);
  }
  return out.take();
}

inline std::string format_grid_text(const GridEnergy& g) {
  std::string out = std::string(kGridMagic) + " text\n";
  out += "dims";
  for (auto d : g.shape().dims()) out += " " + std::to_string(d);
  out += "\nconnectivity " + to_string(g.shape().connectivity()) + "\nunary";
  for (double w : g.unary()) out += " " + detail::format_double(w);
  out += "\n";
  const auto weights = g.direction_weights();
  for (std::size_t k = 0; k < weights.size(); ++k) {
    out += "direction " + std::to_string(k);
    for (double a : weights[k]) out += " " + detail::format_double(a);
    out += "\n";
  }
  return out;
}

namespace detail {

inline GridEnergy parse_grid_binary(std::string_view data, const std::string& origin) {
  ByteReader in(data, origin);
  in.bytes(kGridMagic.size() + 1);
  const std::uint8_t ndims = in.u8();
  const Connectivity conn = connectivity_from_code(in.u8(), origin);
  if (ndims != 2 && ndims != 3) throw io_error(origin + ": unsupported dimension count");
  std::vector<std::size_t> dims(ndims);
  for (auto& d : dims) {
    const auto v = in.u64();
    if (v == 0 || v > 0xFFFFFFFFull) throw io_error(origin + ": bad grid dimension");
    d = static_cast<std::size_t>(v);
  }
  std::optional<GridShape> shape;
  try {
    shape.emplace(dims, conn);
  } catch (const invalid_input& e) {
    throw io_error(origin + ": " + e.what());
  }
  // Check the payload size before allocating anything proportional to it.
  std::size_t values = shape->size();
  for (std::size_t k = 0; k < shape->directions().size(); ++k) values += shape->direction_slots(k);
  if (in.remaining() / 8 < values) throw io_error(origin + ": truncated file");
  if (in.remaining() != values * 8) throw io_error(origin + ": trailing bytes after payload");
  std::vector<double> unary(shape->size());
  for (auto& w : unary) w = in.f64();
  std::vector<std::vector<double>> weights(shape->directions().size());
  for (std::size_t k = 0; k < weights.size(); ++k) {
    weights[k].resize(shape->direction_slots(k));
    for (auto& a : weights[k]) a = in.f64();
  }
  return build_grid(*shape, std::move(unary), weights, origin);
}

inline GridEnergy parse_grid_text(std::string_view data, const std::string& origin) {
  std::vector<std::vector<std::string_view>> lines;
  std::size_t pos = 0;
  while (pos < data.size()) {
    const std::size_t nl = data.find('\n', pos);
    auto line = data.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? data.size() : nl + 1;
    auto tok = split_ws(line);
    if (!tok.empty()) lines.push_back(std::move(tok));
  }
  auto fail = [&](const std::string& what) { return io_error(origin + ": " + what); };
  if (lines.size() < 3 || lines[1][0] != "dims" || lines[2][0] != "connectivity" || lines[2].size() != 2) {
    throw fail("truncated or malformed header");
  }
  std::vector<std::size_t> dims;
  for (std::size_t k = 1; k < lines[1].size(); ++k) {
    auto v = parse_uint(lines[1][k]);
    if (!v || *v == 0) throw fail("bad grid dimension");
    dims.push_back(static_cast<std::size_t>(*v));
  }
  std::optional<GridShape> shape;
  try {
    shape.emplace(dims, parse_connectivity(std::string(lines[2][1])));
  } catch (const invalid_input& e) {
    throw fail(e.what());
  }
  const std::size_t ndir = shape->directions().size();
  if (lines.size() != 4 + ndir) throw fail("expected unary and " + std::to_string(ndir) + " direction lines");
  auto values = [&](const std::vector<std::string_view>& tok, std::size_t skip, std::size_t want,
                    const std::string& what) {
    if (tok.size() != skip + want) {
      throw fail(what + ": expected " + std::to_string(want) + " values, got " + std::to_string(tok.size() - skip));
    }
    std::vector<double> out(want);
    for (std::size_t k = 0; k < want; ++k) {
      auto v = parse_double(tok[skip + k]);
      if (!v) throw fail(what + ": bad number '" + std::string(tok[skip + k]) + "'");
      out[k] = *v;
    }
    return out;
  };
  if (lines[3][0] != "unary") throw fail("missing unary line");
  auto unary = values(lines[3], 1, shape->size(), "unary");
  std::vector<std::vector<double>> weights(ndir);
  for (std::size_t k = 0; k < ndir; ++k) {
    const auto& tok = lines[4 + k];
    if (tok.size() < 2 || tok[0] != "direction" || tok[1] != std::to_string(k)) {
      throw fail("expected 'direction " + std::to_string(k) + "'");
    }
    weights[k] = values(tok, 2, shape->direction_slots(k), "direction " + std::to_string(k));
  }
  return build_grid(*shape, std::move(unary), weights, origin);
}

}  // namespace detail

/// Reads either PCUT1 variant, told apart by the byte after the magic.
inline GridEnergy parse_grid(std::string_view data, const std::string& origin = "<grid>") {
  if (data.size() < kGridMagic.size() + 1 || data.substr(0, kGridMagic.size()) != kGridMagic) {
    throw io_error(origin + ": not a PCUT1 file (bad magic)");
  }
  const char variant = data[kGridMagic.size()];
  if (variant == 'B') return detail::parse_grid_binary(data, origin);
  if (variant == ' ' && data.substr(kGridMagic.size(), 5) == " text") return detail::parse_grid_text(data, origin);
  throw io_error(origin + ": unknown PCUT1 variant");
}

inline GridEnergy read_grid(const std::string& path) { return parse_grid(detail::read_file(path), path); }

inline void write_grid(const GridEnergy& g, const std::string& path, bool text = false) {
  detail::write_file(path, text ? format_grid_text(g) : format_grid_binary(g));
}

// ---------------------------------------------------------------------------
// Dual snapshots

/// Identifies the pairwise structure a dual state belongs to: grid shape,
/// connectivity, class count and every edge weight (bitwise). Unaries are
/// left out on purpose so a state can seed a run on perturbed unaries.
inline std::uint64_t dual_fingerprint(const GridEnergy& g, const ChainDecomposition& dec) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](std::uint64_t v) {
    for (int k = 0; k < 8; ++k) {
      h ^= (v >> (8 * k)) & 0xFF;
      h *= 1099511628211ull;
    }
  };
  for (auto d : g.shape().dims()) mix(d);
  mix(detail::connectivity_code(g.shape().connectivity()));
  mix(g.size());
  mix(dec.class_count());
  for (const auto& e : g.edges()) {
    mix(e.i);
    mix(e.j);
    mix(std::bit_cast<std::uint64_t>(e.weight));
  }
  return h;
}

class fingerprint_mismatch : public io_error {
 public:
  using io_error::io_error;
};

inline constexpr std::string_view kDualMagic = "PCUTDUAL1";

struct DualSnapshot {
  std::uint64_t fingerprint = 0;
  DualState state;
};

inline std::string format_dual(const DualState& state, std::uint64_t fingerprint) {
  detail::ByteWriter out;
  out.bytes(kDualMagic);
  out.u64(fingerprint);
  for (const BlockVector* v : {&state.y, &state.lambda, &state.z}) {
    out.u64(v->blocks());
    out.u64(v->length());
    for (double x : v->flat()) out.f64(x);
  }
  return out.take();
}

inline DualSnapshot parse_dual(std::string_view data, const std::string& origin = "<dual>") {
  if (data.substr(0, kDualMagic.size()) != kDualMagic) throw io_error(origin + ": not a dual snapshot (bad magic)");
  detail::ByteReader in(data, origin);
  in.bytes(kDualMagic.size());
  DualSnapshot snap;
  snap.fingerprint = in.u64();
  for (BlockVector* v : {&snap.state.y, &snap.state.lambda, &snap.state.z}) {
    const auto blocks = in.u64();
    const auto length = in.u64();
    if (blocks > 255 || (blocks && length > in.remaining() / 8 / blocks)) throw io_error(origin + ": truncated file");
    *v = BlockVector(static_cast<std::size_t>(blocks), static_cast<std::size_t>(length));
    for (double& x : v->flat()) x = in.f64();
  }
  if (in.remaining() != 0) throw io_error(origin + ": trailing bytes after payload");
  return snap;
}

inline void save_dual(const DualState& state, std::uint64_t fingerprint, const std::string& path) {
  detail::write_file(path, format_dual(state, fingerprint));
}

/// Loads a snapshot and refuses it when the fingerprint differs, unless
/// `force` is set.
inline DualState load_dual(const std::string& path, std::uint64_t expected, bool force = false) {
  auto snap = parse_dual(detail::read_file(path), path);
  if (snap.fingerprint != expected && !force) {
    throw fingerprint_mismatch(path + ": dual state belongs to a different instance (fingerprint mismatch)");
  }
  return std::move(snap.state);
}

// ---------------------------------------------------------------------------
// Traces and labelings

inline constexpr std::string_view kTraceHeader = "iter,gap,dual_objective,jaccard_to_final,wall_ms";

/// dual_objective is the certificate's lower bound sum_i min(s_i - w_i, 0),
/// so gap = energy - dual_objective row by row.
inline std::string format_trace_csv(std::span<const TraceEntry> trace) {
  std::string out(kTraceHeader);
  out += "\n";
  for (const auto& e : trace) {
    out += std::to_string(e.iter) + "," + detail::format_double(e.gap) + "," + detail::format_double(e.dual_bound) +
           "," + detail::format_double(e.jaccard) + "," + detail::format_double(e.wall_ms) + "\n";
  }
  return out;
}

inline void write_trace_csv(std::span<const TraceEntry> trace, const std::string& path) {
  detail::write_file(path, format_trace_csv(trace));
}

inline std::string format_labeling(std::span<const std::uint8_t> x) {
  std::string out;
  out.reserve(2 * x.size());
  for (auto b : x) {
    out += b ? '1' : '0';
    out += '\n';
  }
  return out;
}

inline void write_labeling(std::span<const std::uint8_t> x, const std::string& path) {
  detail::write_file(path, format_labeling(x));
}

inline Labeling read_labeling(const std::string& path) {
  const auto data = detail::read_file(path);
  Labeling x;
  for (auto tok : detail::split_ws(data)) {
    if (tok == "0" || tok == "1") {
      x.push_back(tok == "1" ? 1 : 0);
    } else {
      throw io_error(path + ": labels must be 0 or 1");
    }
  }
  return x;
}

}  // namespace paracut
