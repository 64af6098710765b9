#include "survey/map_io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "survey/error.hpp"

namespace survey {

namespace {

// Whitespace tokenizer that skips '#' comments.
class Tokens {
 public:
  explicit Tokens(std::istream& in) : in_(in) {}

  std::string next() {
    std::string tok;
    while (in_ >> tok) {
      if (tok.front() == '#') {
        std::string rest;
        std::getline(in_, rest);
        continue;
      }
      return tok;
    }
    throw IoError("unexpected end of map file");
  }

  void expect(const std::string& keyword) {
    const std::string tok = next();
    if (tok != keyword) throw IoError("expected '" + keyword + "', found '" + tok + "'");
  }

  double number() {
    const std::string tok = next();
    try {
      std::size_t used = 0;
      const double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      throw IoError("malformed number '" + tok + "'");
    }
  }

  std::size_t count() {
    const double v = number();
    if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v))) {
      throw IoError("expected a non-negative integer");
    }
    return static_cast<std::size_t>(v);
  }

 private:
  std::istream& in_;
};

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

}  // namespace

void write_map_text(std::ostream& out, const RadioMap& map) {
  const GridGeometry& g = map.grid;
  out << std::setprecision(17);
  out << "radiomap 1\n";
  out << "rows " << g.rows() << "\ncols " << g.cols() << "\n";
  out << "spacing_m " << g.spacing() << "\n";
  out << "origin_m " << g.origin().x << ' ' << g.origin().y << "\n";
  out << "transmitters " << map.num_transmitters() << "\n";
  out << "known_transmitters " << map.transmitters.size() << "\n";
  for (const auto& tx : map.transmitters) {
    out << "tx " << tx.position.x << ' ' << tx.position.y << ' ' << tx.position.z << ' '
        << tx.power_dbm << ' ' << tx.carrier_hz << "\n";
  }
  for (std::size_t t = 0; t < map.num_transmitters(); ++t) {
    out << "power_db " << t << "\n";
    const GridMatrix& p = map.per_tx_power_db[t];
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      for (Eigen::Index j = 0; j < p.cols(); ++j) out << (j ? " " : "") << p(i, j);
      out << "\n";
    }
  }
  out << "buildings " << g.buildings().size() << "\n";
  for (std::size_t b = 0; b < g.buildings().size(); ++b) {
    out << (b ? " " : "") << g.buildings()[b];
  }
  out << "\n";
}

RadioMap read_map_text(std::istream& in) {
  Tokens tok(in);
  tok.expect("radiomap");
  if (tok.count() != 1) throw IoError("unsupported map format version");
  tok.expect("rows");
  const std::size_t rows = tok.count();
  tok.expect("cols");
  const std::size_t cols = tok.count();
  tok.expect("spacing_m");
  const double spacing = tok.number();
  tok.expect("origin_m");
  const double ox = tok.number();
  const double oy = tok.number();
  tok.expect("transmitters");
  const std::size_t num_tx = tok.count();
  tok.expect("known_transmitters");
  const std::size_t known = tok.count();
  if (known != 0 && known != num_tx) {
    throw IoError("known_transmitters must be 0 or equal to transmitters");
  }
  std::vector<Transmitter> txs;
  for (std::size_t t = 0; t < known; ++t) {
    tok.expect("tx");
    Transmitter tx;
    tx.position.x = tok.number();
    tx.position.y = tok.number();
    tx.position.z = tok.number();
    tx.power_dbm = tok.number();
    tx.carrier_hz = tok.number();
    txs.push_back(tx);
  }
  std::vector<GridMatrix> powers;
  for (std::size_t t = 0; t < num_tx; ++t) {
    tok.expect("power_db");
    if (tok.count() != t) throw IoError("power blocks out of order");
    GridMatrix p(rows, cols);
    for (Eigen::Index k = 0; k < p.size(); ++k) p.data()[k] = tok.number();
    powers.push_back(std::move(p));
  }
  tok.expect("buildings");
  const std::size_t nb = tok.count();
  std::vector<std::size_t> buildings(nb);
  for (auto& b : buildings) b = tok.count();
  try {
    GridGeometry grid(rows, cols, spacing, {ox, oy}, std::move(buildings));
    return make_radio_map(std::move(grid), std::move(txs), std::move(powers));
  } catch (const ConfigError& e) {
    throw IoError(std::string("invalid map: ") + e.what());
  }
}

void save_map(const std::filesystem::path& path, const RadioMap& map) {
  auto out = open_for_write(path);
  write_map_text(out, map);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

RadioMap load_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open map file '" + path.string() + "'");
  return read_map_text(in);
}

void write_map_csv(std::ostream& out, const RadioMap& map) {
  const GridGeometry& g = map.grid;
  out << std::setprecision(17);
  out << "row,col,x_m,y_m,building";
  for (std::size_t t = 0; t < map.num_transmitters(); ++t) out << ",tx" << t << "_db";
  out << ",combined_db\n";
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Cell c = g.cell(k);
    const Position2 p = g.position(k);
    out << c.row << ',' << c.col << ',' << p.x << ',' << p.y << ',' << (g.is_building(k) ? 1 : 0);
    for (const auto& m : map.per_tx_power_db) out << ',' << m.data()[k];
    out << ',' << map.combined_power_db.data()[k] << "\n";
  }
}

void save_map_csv(const std::filesystem::path& path, const RadioMap& map) {
  auto out = open_for_write(path);
  write_map_csv(out, map);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace survey
