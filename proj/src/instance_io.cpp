#include "linbpi/instance_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace linbpi {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) {
  throw InvalidInstance("instance: " + msg);
}

const json& need(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) fail(std::string("missing key '") + key + "'");
  return *it;
}

std::size_t need_uint(const json& j, const char* key) {
  const json& v = need(j, key);
  if (!v.is_number_unsigned() || v.get<std::uint64_t>() == 0)
    fail(std::string("'") + key + "' must be a positive integer");
  return v.get<std::size_t>();
}

std::vector<double> parse_vector(const json& j, std::size_t d,
                                 const std::string& where) {
  if (!j.is_array() || j.size() != d)
    fail(where + " must be an array of length " + std::to_string(d));
  std::vector<double> out(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    if (!j[i].is_number()) fail(where + "[" + std::to_string(i) + "] not a number");
    out[i] = j[i].get<double>();
  }
  return out;
}

Mat parse_matrix(const json& j, std::size_t rows, std::size_t cols,
                 const std::string& where) {
  if (!j.is_array() || j.size() != rows)
    fail(where + " must be an array of length " + std::to_string(rows));
  Mat m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    auto row = parse_vector(j[r], cols, where + "[" + std::to_string(r) + "]");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = row[c];
  }
  return m;
}

FeatureMap parse_features(const json& j, std::size_t S, std::size_t A,
                          std::size_t d) {
  const json& p = need(j, "phi");
  if (!p.is_array() || p.size() != S) fail("phi must have S rows");
  FeatureMap f;
  f.S = S;
  f.A = A;
  f.d = d;
  f.phi.assign(S * A * d, 0.0);
  for (std::size_t s = 0; s < S; ++s) {
    if (!p[s].is_array() || p[s].size() != A)
      fail("phi[" + std::to_string(s) + "] must have A entries");
    for (std::size_t a = 0; a < A; ++a) {
      auto v = parse_vector(p[s][a], d,
                            "phi[" + std::to_string(s) + "][" +
                                std::to_string(a) + "]");
      std::copy(v.begin(), v.end(), f.phi.begin() + (s * A + a) * d);
    }
  }
  return f;
}

json features_to_json(const FeatureMap& f) {
  json p = json::array();
  for (std::size_t s = 0; s < f.S; ++s) {
    json row = json::array();
    for (std::size_t a = 0; a < f.A; ++a) {
      json v = json::array();
      for (std::size_t j = 0; j < f.d; ++j) v.push_back(f.at(s, a)[j]);
      row.push_back(std::move(v));
    }
    p.push_back(std::move(row));
  }
  return p;
}

json matrix_to_json(const Mat& m) {
  json out = json::array();
  for (std::size_t r = 0; r < m.rows; ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < m.cols; ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace

Instance parse_instance(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(std::string("not valid JSON: ") + e.what());
  }
  if (!j.is_object()) fail("top level must be an object");
  const std::size_t d = need_uint(j, "d");
  const std::size_t S = need_uint(j, "S");
  const std::size_t A = need_uint(j, "A");
  const json& mode = need(j, "mode");
  if (!mode.is_string()) fail("'mode' must be a string");
  const std::string ms = mode.get<std::string>();

  if (ms == "discounted") {
    DiscountedLinearMdp m;
    m.features = parse_features(j, S, A, d);
    const json& g = need(j, "gamma");
    if (!g.is_number()) fail("'gamma' must be a number");
    m.gamma = g.get<double>();
    m.theta = parse_vector(need(j, "theta"), d, "theta");
    m.mu = parse_matrix(need(j, "mu"), S, d, "mu");
    m.finalize();
    return Instance(std::move(m));
  }
  if (ms == "episodic") {
    EpisodicLinearMdp m;
    m.features = parse_features(j, S, A, d);
    m.H = need_uint(j, "H");
    const json& th = need(j, "theta");
    const json& mu = need(j, "mu");
    if (!th.is_array() || th.size() != m.H) fail("theta must have H entries");
    if (!mu.is_array() || mu.size() != m.H) fail("mu must have H entries");
    for (std::size_t h = 0; h < m.H; ++h) {
      m.theta.push_back(
          parse_vector(th[h], d, "theta[" + std::to_string(h) + "]"));
      m.mu.push_back(
          parse_matrix(mu[h], S, d, "mu[" + std::to_string(h) + "]"));
    }
    m.finalize();
    return Instance(std::move(m));
  }
  fail("'mode' must be \"discounted\" or \"episodic\", got \"" + ms + "\"");
}

Instance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_instance(ss.str());
}

std::string instance_to_json(const Instance& inst) {
  json j;
  if (const auto* m = std::get_if<DiscountedLinearMdp>(&inst)) {
    j["d"] = m->features.d;
    j["S"] = m->features.S;
    j["A"] = m->features.A;
    j["mode"] = "discounted";
    j["gamma"] = m->gamma;
    j["phi"] = features_to_json(m->features);
    j["theta"] = m->theta;
    j["mu"] = matrix_to_json(m->mu);
  } else {
    const auto& e = std::get<EpisodicLinearMdp>(inst);
    j["d"] = e.features.d;
    j["S"] = e.features.S;
    j["A"] = e.features.A;
    j["mode"] = "episodic";
    j["H"] = e.H;
    j["phi"] = features_to_json(e.features);
    json th = json::array(), mu = json::array();
    for (std::size_t h = 0; h < e.H; ++h) {
      th.push_back(e.theta[h]);
      mu.push_back(matrix_to_json(e.mu[h]));
    }
    j["theta"] = std::move(th);
    j["mu"] = std::move(mu);
  }
  return j.dump(2);
}

void save_instance(const Instance& inst, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail("cannot write '" + path + "'");
  out << instance_to_json(inst) << '\n';
}

bool is_episodic(const Instance& inst) {
  return std::holds_alternative<EpisodicLinearMdp>(inst);
}

const FeatureMap& features_of(const Instance& inst) {
  return std::visit([](const auto& m) -> const FeatureMap& {
    return m.features;
  }, inst);
}

}  // namespace linbpi
