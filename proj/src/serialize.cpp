#include "ssm/serialize.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace ssm {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Complex json_complex(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2)
    throw std::invalid_argument("complex values are [re, im] pairs");
  return {j[0].get<double>(), j[1].get<double>()};
}

Rational json_rational(const nlohmann::json& j) {
  if (j.is_string()) return parse_rational(j.get<std::string>());
  if (j.is_number_integer()) return Rational(j.get<long long>());
  throw std::invalid_argument("probabilities must be fraction/decimal strings");
}

void push_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t read_u64(const std::vector<std::uint8_t>& in, std::size_t& pos) {
  if (pos + 8 > in.size()) throw std::invalid_argument("truncated binary measure");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in[pos + i]) << (8 * i);
  pos += 8;
  return v;
}

void push_f64(std::vector<std::uint8_t>& out, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, 8);
  push_u64(out, v);
}

double read_f64(const std::vector<std::uint8_t>& in, std::size_t& pos) {
  const std::uint64_t v = read_u64(in, pos);
  double d;
  std::memcpy(&d, &v, 8);
  return d;
}

}  // namespace

std::string measure_to_csv(const DiscreteMeasure& mu) {
  std::ostringstream out;
  out << "re,im,weight\n";
  for (std::size_t i = 0; i < mu.size(); ++i)
    out << fmt_double(mu.atoms()[i].real()) << ',' << fmt_double(mu.atoms()[i].imag())
        << ',' << format_rational(mu.weights()[i]) << '\n';
  return out.str();
}

DiscreteMeasure measure_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<Complex> atoms;
  std::vector<Rational> weights;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line.rfind("re,", 0) == 0) continue;
    }
    std::istringstream row(line);
    std::string re, im, w;
    if (!std::getline(row, re, ',') || !std::getline(row, im, ',') ||
        !std::getline(row, w))
      throw std::invalid_argument("malformed CSV row: " + line);
    atoms.emplace_back(std::stod(re), std::stod(im));
    weights.push_back(parse_rational(w));
  }
  return DiscreteMeasure::normalized(std::move(atoms), std::move(weights));
}

std::vector<std::uint8_t> measure_to_binary(const DiscreteMeasure& mu) {
  std::vector<std::uint8_t> out;
  out.reserve(4 + 8 + mu.size() * 32);
  out.insert(out.end(), {'S', 'S', 'M', 'M'});
  push_u64(out, mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    push_f64(out, mu.atoms()[i].real());
    push_f64(out, mu.atoms()[i].imag());
    const BigInt num = boost::multiprecision::numerator(mu.weights()[i]);
    const BigInt den = boost::multiprecision::denominator(mu.weights()[i]);
    if (num < 0 || num > std::numeric_limits<std::uint64_t>::max() ||
        den > std::numeric_limits<std::uint64_t>::max())
      throw std::invalid_argument("weight does not fit the u64/u64 wire format");
    push_u64(out, num.convert_to<std::uint64_t>());
    push_u64(out, den.convert_to<std::uint64_t>());
  }
  return out;
}

DiscreteMeasure measure_from_binary(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "SSMM", 4) != 0)
    throw std::invalid_argument("not a binary measure (bad magic)");
  std::size_t pos = 4;
  const std::uint64_t count = read_u64(bytes, pos);
  std::vector<Complex> atoms;
  std::vector<Rational> weights;
  atoms.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const double re = read_f64(bytes, pos);
    const double im = read_f64(bytes, pos);
    const std::uint64_t num = read_u64(bytes, pos);
    const std::uint64_t den = read_u64(bytes, pos);
    atoms.emplace_back(re, im);
    weights.emplace_back(Rational(BigInt(num), BigInt(den)));
  }
  return DiscreteMeasure::normalized(std::move(atoms), std::move(weights));
}

Ifs ifs_from_json(const nlohmann::json& j) {
  if (!j.contains("maps") || !j.contains("probs"))
    throw std::invalid_argument("IFS JSON needs \"maps\" and \"probs\"");
  std::vector<Similarity> maps;
  for (const auto& m : j.at("maps"))
    maps.emplace_back(json_complex(m.at("lambda")), json_complex(m.at("t")));
  std::vector<Rational> probs;
  for (const auto& p : j.at("probs")) probs.push_back(json_rational(p));
  return Ifs(std::move(maps), std::move(probs));
}

nlohmann::json ifs_to_json(const Ifs& ifs) {
  nlohmann::json maps = nlohmann::json::array();
  for (const auto& m : ifs.maps)
    maps.push_back({{"lambda", {m.lambda.real(), m.lambda.imag()}},
                    {"t", {m.t.real(), m.t.imag()}}});
  nlohmann::json probs = nlohmann::json::array();
  for (const auto& p : ifs.probs) probs.push_back(format_rational(p));
  return {{"maps", maps}, {"probs", probs}};
}

Model model_from_json(const nlohmann::json& j) {
  if (!j.contains("systems") || !j.contains("selection"))
    throw std::invalid_argument("model JSON needs \"systems\" and \"selection\"");

  // sorted key order fixes the index set
  std::map<std::string, nlohmann::json> ordered;
  for (const auto& [key, value] : j.at("systems").items()) ordered[key] = value;
  std::vector<std::string> names;
  std::vector<Ifs> systems;
  std::map<std::string, int> index_of;
  for (const auto& [key, value] : ordered) {
    index_of[key] = static_cast<int>(names.size());
    names.push_back(key);
    systems.push_back(ifs_from_json(value));
  }

  const auto& sel = j.at("selection");
  const std::string kind = sel.at("kind").get<std::string>();
  const std::uint64_t seed = sel.value("seed", 0ull);
  SelectionProcess process;
  if (kind == "bernoulli") {
    std::vector<Rational> q(names.size(), Rational(0));
    for (const auto& [key, value] : sel.at("q").items()) {
      if (!index_of.count(key))
        throw std::invalid_argument("selection references unknown system " + key);
      q[static_cast<size_t>(index_of[key])] = json_rational(value);
    }
    process = SelectionProcess::bernoulli(std::move(q), seed);
  } else if (kind == "markov") {
    std::vector<std::vector<Rational>> matrix;
    for (const auto& row : sel.at("matrix")) {
      std::vector<Rational> r;
      for (const auto& p : row) r.push_back(json_rational(p));
      matrix.push_back(std::move(r));
    }
    process = SelectionProcess::markov(std::move(matrix), seed);
  } else if (kind == "explicit") {
    std::vector<int> seq;
    for (const auto& s : sel.at("sequence")) {
      const std::string key = s.get<std::string>();
      if (!index_of.count(key))
        throw std::invalid_argument("sequence references unknown system " + key);
      seq.push_back(index_of[key]);
    }
    process = SelectionProcess::fixed(std::move(seq));
  } else {
    throw std::invalid_argument("unknown selection kind: " + kind);
  }
  return Model(std::move(names), std::move(systems), std::move(process));
}

DisintegrationPlan plan_from_json(const nlohmann::json& j) {
  std::vector<Complex> translations;
  for (const auto& t : j.at("translations")) translations.push_back(json_complex(t));
  std::vector<Rational> probs;
  for (const auto& p : j.at("probs")) probs.push_back(json_rational(p));
  std::vector<Complex> betas;
  for (const auto& b : j.at("betas")) betas.push_back(json_complex(b));
  return DisintegrationPlan(std::move(translations), std::move(probs), std::move(betas),
                            j.at("r").get<int>(), j.at("s").get<int>());
}

bool json_has_lambda(const nlohmann::json& j) { return j.contains("lambda"); }

Complex json_lambda(const nlohmann::json& j) { return json_complex(j.at("lambda")); }

bool validate_summary(const nlohmann::json& summary, std::string* error) {
  auto fail = [&](const std::string& msg) {
    if (error) *error = msg;
    return false;
  };
  if (!summary.is_object()) return fail("summary must be an object");
  if (!summary.contains("subcommand") || !summary.at("subcommand").is_string())
    return fail("missing string field: subcommand");
  if (!summary.contains("ok") || !summary.at("ok").is_boolean())
    return fail("missing boolean field: ok");
  if (summary.contains("outputs")) {
    if (!summary.at("outputs").is_array()) return fail("outputs must be an array");
    for (const auto& o : summary.at("outputs"))
      if (!o.is_string()) return fail("outputs entries must be strings");
  }
  return true;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << text;
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace ssm
