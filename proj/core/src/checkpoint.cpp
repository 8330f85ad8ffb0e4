#include "usac/checkpoint.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "usac/errors.hpp"

namespace usac {

std::string format_real(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw ContractError("format_real: conversion failed");
  return std::string(buf, end);
}

double parse_real(const std::string& text) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) throw ContractError("parse_real: not a number: '" + text + "'");
  return value;
}

void Checkpoint::put_tensor(const std::string& key, Eigen::MatrixXd value) {
  entries_[key] = std::move(value);
}
void Checkpoint::put_real(const std::string& key, double value) { entries_[key] = value; }
void Checkpoint::put_int(const std::string& key, std::int64_t value) { entries_[key] = value; }
void Checkpoint::put_text(const std::string& key, std::string value) { entries_[key] = std::move(value); }

template <typename T>
const T& Checkpoint::get(const std::string& key, const char* kind) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw ContractError("checkpoint: missing key '" + key + "'");
  const T* v = std::get_if<T>(&it->second);
  if (v == nullptr) throw ContractError("checkpoint: key '" + key + "' is not a " + kind);
  return *v;
}

const Eigen::MatrixXd& Checkpoint::tensor(const std::string& key) const {
  return get<Eigen::MatrixXd>(key, "tensor");
}
double Checkpoint::real(const std::string& key) const { return get<double>(key, "real"); }
std::int64_t Checkpoint::integer(const std::string& key) const { return get<std::int64_t>(key, "int"); }
const std::string& Checkpoint::text(const std::string& key) const { return get<std::string>(key, "text"); }

void Checkpoint::put_params(const std::string& prefix, const nn::Parameters& params) {
  for (std::size_t i = 0; i < params.num_layers(); ++i) {
    put_tensor(prefix + "/weight/" + std::to_string(i), params.weights[i]);
    put_tensor(prefix + "/bias/" + std::to_string(i), params.biases[i]);
  }
}

nn::Parameters Checkpoint::params(const std::string& prefix) const {
  nn::Parameters p;
  for (std::size_t i = 0; contains(prefix + "/weight/" + std::to_string(i)); ++i) {
    p.weights.push_back(tensor(prefix + "/weight/" + std::to_string(i)));
    const auto& b = tensor(prefix + "/bias/" + std::to_string(i));
    if (b.cols() != 1) throw ContractError("checkpoint: bias '" + prefix + "' is not a column");
    p.biases.emplace_back(b.col(0));
  }
  if (p.weights.empty()) throw ContractError("checkpoint: no parameters under '" + prefix + "'");
  return p;
}

void Checkpoint::put_adam(const std::string& prefix, const nn::AdamState& state) {
  put_params(prefix + "/m", state.first_moment);
  put_params(prefix + "/v", state.second_moment);
  put_int(prefix + "/step", state.step_count);
  put_real(prefix + "/lr", state.config.learning_rate);
  put_real(prefix + "/beta1", state.config.beta1);
  put_real(prefix + "/beta2", state.config.beta2);
  put_real(prefix + "/eps", state.config.epsilon);
}

nn::AdamState Checkpoint::adam(const std::string& prefix) const {
  nn::AdamState s;
  s.first_moment = params(prefix + "/m");
  s.second_moment = params(prefix + "/v");
  s.step_count = integer(prefix + "/step");
  s.config = {real(prefix + "/lr"), real(prefix + "/beta1"), real(prefix + "/beta2"), real(prefix + "/eps")};
  return s;
}

void Checkpoint::put_scalar_adam(const std::string& prefix, const nn::ScalarAdamState& state) {
  put_real(prefix + "/m", state.first_moment);
  put_real(prefix + "/v", state.second_moment);
  put_int(prefix + "/step", state.step_count);
  put_real(prefix + "/lr", state.config.learning_rate);
  put_real(prefix + "/beta1", state.config.beta1);
  put_real(prefix + "/beta2", state.config.beta2);
  put_real(prefix + "/eps", state.config.epsilon);
}

nn::ScalarAdamState Checkpoint::scalar_adam(const std::string& prefix) const {
  nn::ScalarAdamState s;
  s.first_moment = real(prefix + "/m");
  s.second_moment = real(prefix + "/v");
  s.step_count = integer(prefix + "/step");
  s.config = {real(prefix + "/lr"), real(prefix + "/beta1"), real(prefix + "/beta2"), real(prefix + "/eps")};
  return s;
}

std::string Checkpoint::serialize() const {
  std::ostringstream os;
  os << "usac-checkpoint " << kFormatVersion << '\n';
  os << "entries " << entries_.size() << '\n';
  for (const auto& [key, value] : entries_) {
    if (const auto* m = std::get_if<Eigen::MatrixXd>(&value)) {
      os << "tensor " << key << ' ' << m->rows() << ' ' << m->cols() << '\n';
      for (Eigen::Index r = 0; r < m->rows(); ++r) {
        for (Eigen::Index c = 0; c < m->cols(); ++c) {
          if (c) os << ' ';
          os << format_real((*m)(r, c));
        }
        os << '\n';
      }
    } else if (const auto* d = std::get_if<double>(&value)) {
      os << "real " << key << ' ' << format_real(*d) << '\n';
    } else if (const auto* i = std::get_if<std::int64_t>(&value)) {
      os << "int " << key << ' ' << *i << '\n';
    } else {
      const auto& s = std::get<std::string>(value);
      os << "text " << key << ' ' << s.size() << '\n' << s << '\n';
    }
  }
  os << "end\n";
  return os.str();
}

Checkpoint Checkpoint::parse(const std::string& text) {
  std::istringstream is(text);
  std::string magic;
  int version = 0;
  is >> magic >> version;
  if (!is || magic != "usac-checkpoint") throw ContractError("checkpoint: bad header");
  if (version != kFormatVersion)
    throw ContractError("checkpoint: unsupported format version " + std::to_string(version));
  std::string word;
  std::size_t count = 0;
  is >> word >> count;
  if (!is || word != "entries") throw ContractError("checkpoint: missing entry count");

  Checkpoint cp;
  for (std::size_t n = 0; n < count; ++n) {
    std::string kind, key;
    is >> kind >> key;
    if (!is) throw ContractError("checkpoint: truncated before entry " + std::to_string(n));
    if (kind == "tensor") {
      Eigen::Index rows = 0, cols = 0;
      is >> rows >> cols;
      if (!is || rows < 0 || cols < 0) throw ContractError("checkpoint: bad shape for '" + key + "'");
      Eigen::MatrixXd m(rows, cols);
      std::string tok;
      for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) {
          if (!(is >> tok)) throw ContractError("checkpoint: truncated tensor '" + key + "'");
          m(r, c) = parse_real(tok);
        }
      cp.put_tensor(key, std::move(m));
    } else if (kind == "real") {
      std::string tok;
      is >> tok;
      cp.put_real(key, parse_real(tok));
    } else if (kind == "int") {
      std::int64_t v = 0;
      is >> v;
      if (!is) throw ContractError("checkpoint: bad int for '" + key + "'");
      cp.put_int(key, v);
    } else if (kind == "text") {
      std::size_t len = 0;
      is >> len;
      is.get();  // newline after the length
      std::string s(len, '\0');
      is.read(s.data(), static_cast<std::streamsize>(len));
      if (!is) throw ContractError("checkpoint: truncated text '" + key + "'");
      cp.put_text(key, std::move(s));
    } else {
      throw ContractError("checkpoint: unknown entry kind '" + kind + "'");
    }
  }
  is >> word;
  if (word != "end") throw ContractError("checkpoint: missing end marker");
  return cp;
}

void Checkpoint::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path.string());
  out << serialize();
  if (!out) throw IoError("failed writing checkpoint: " + path.string());
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

void Checkpoint::merge(const std::string& prefix, const Checkpoint& other) {
  for (const auto& [key, value] : other.entries_) entries_[prefix + "/" + key] = value;
}

Checkpoint Checkpoint::extract(const std::string& prefix) const {
  Checkpoint out;
  const std::string head = prefix + "/";
  for (auto it = entries_.lower_bound(head); it != entries_.end() && it->first.compare(0, head.size(), head) == 0; ++it)
    out.entries_[it->first.substr(head.size())] = it->second;
  return out;
}

bool Checkpoint::operator==(const Checkpoint& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  auto it = other.entries_.begin();
  for (const auto& [key, value] : entries_) {
    if (key != it->first || value.index() != it->second.index()) return false;
    if (const auto* m = std::get_if<Eigen::MatrixXd>(&value)) {
      const auto& o = std::get<Eigen::MatrixXd>(it->second);
      if (m->rows() != o.rows() || m->cols() != o.cols()) return false;
      if (m->size() > 0 && std::memcmp(m->data(), o.data(), sizeof(double) * m->size()) != 0) return false;
    } else if (const auto* r = std::get_if<double>(&value)) {
      if (std::memcmp(r, &std::get<double>(it->second), sizeof(double)) != 0) return false;
    } else if (value != it->second) {
      return false;
    }
    ++it;
  }
  return true;
}

}  // namespace usac
