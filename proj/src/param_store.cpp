#include "cdsrnp/param_store.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace cdsrnp::ad {

namespace {

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

void write_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  write_u64(out, bits);
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw std::runtime_error("parameter container truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw std::runtime_error("parameter container truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

double read_f64(std::istream& in) {
  const std::uint64_t bits = read_u64(in);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace

TensorPtr ParameterStore::create(const std::string& name, std::vector<std::size_t> shape) {
  auto t = make_tensor(std::move(shape), true);
  insert(name, t);
  return t;
}

void ParameterStore::insert(const std::string& name, TensorPtr t) {
  if (!t->requires_grad) {
    throw std::invalid_argument("parameter '" + name + "' must require gradients");
  }
  if (!params_.emplace(name, std::move(t)).second) {
    throw std::invalid_argument("duplicate parameter name '" + name + "'");
  }
}

const TensorPtr& ParameterStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("no parameter named '" + name + "'");
  return it->second;
}

void ParameterStore::zero_grad() {
  for (auto& [name, t] : params_) t->zero_grad();
}

std::size_t ParameterStore::element_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : params_) n += t->size();
  return n;
}

ParameterStore ParameterStore::clone() const {
  ParameterStore copy;
  for (const auto& [name, t] : params_) {
    auto fresh = make_tensor(t->shape, true);
    fresh->data = t->data;
    copy.insert(name, fresh);
  }
  return copy;
}

void ParameterStore::assign_from(const ParameterStore& other) {
  if (other.size() != size()) {
    throw std::invalid_argument("parameter store mismatch: " + std::to_string(other.size()) +
                                " vs " + std::to_string(size()) + " entries");
  }
  auto it = params_.begin();
  for (const auto& [name, t] : other.params_) {
    if (it->first != name || it->second->shape != t->shape) {
      throw std::invalid_argument("parameter store mismatch at '" + name + "'");
    }
    it->second->data = t->data;
    ++it;
  }
}

void ParameterStore::save(std::ostream& out) const {
  write_u32(out, kFormatVersion);
  write_u64(out, params_.size());
  for (const auto& [name, t] : params_) {
    write_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u32(out, static_cast<std::uint32_t>(t->rank()));
    for (std::size_t d : t->shape) write_u64(out, d);
    for (double v : t->data) write_f64(out, v);
  }
  if (!out) throw std::runtime_error("failed writing parameter container");
}

void ParameterStore::save_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  save(out);
}

ParameterStore ParameterStore::load(std::istream& in) {
  const std::uint32_t version = read_u32(in);
  if (version != kFormatVersion) {
    throw std::runtime_error("unsupported parameter container version " +
                             std::to_string(version));
  }
  ParameterStore store;
  const std::uint64_t count = read_u64(in);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = read_u32(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in) throw std::runtime_error("parameter container truncated");
    const std::uint32_t ndim = read_u32(in);
    std::vector<std::size_t> shape(ndim);
    for (auto& d : shape) d = static_cast<std::size_t>(read_u64(in));
    auto t = make_tensor(shape, true);
    for (auto& v : t->data) v = read_f64(in);
    store.insert(name, std::move(t));
  }
  return store;
}

ParameterStore ParameterStore::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return load(in);
}

}  // namespace cdsrnp::ad
