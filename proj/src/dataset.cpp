#include "rsub/dataset.hpp"

#include <cstdio>
#include <cstring>
#include <memory>
#include <vector>

#include "rsub/errors.hpp"

namespace rsub {

namespace {

constexpr char kMagic[8] = {'R', 'S', 'U', 'B', 'D', 'A', '1', '\0'};

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void put_u64(std::FILE* f, std::uint64_t v) {
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
  if (std::fwrite(buf, 1, 8, f) != 8) throw IoError("dataset write failed");
}

std::uint64_t get_u64(std::FILE* f) {
  unsigned char buf[8];
  if (std::fread(buf, 1, 8, f) != 8) throw IoError("dataset read failed");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

void put_f64(std::FILE* f, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, 8);
  put_u64(f, v);
}

double get_f64(std::FILE* f) {
  const std::uint64_t v = get_u64(f);
  double d;
  std::memcpy(&d, &v, 8);
  return d;
}

void put_block(std::FILE* f, const MatrixXd& m) {
  // x86-64 doubles are already little-endian IEEE; write the payload raw.
  const std::size_t count = static_cast<std::size_t>(m.size());
  if (count && std::fwrite(m.data(), sizeof(double), count, f) != count)
    throw IoError("dataset write failed");
}

void get_block(std::FILE* f, MatrixXd& m) {
  const std::size_t count = static_cast<std::size_t>(m.size());
  if (count && std::fread(m.data(), sizeof(double), count, f) != count)
    throw IoError("dataset read failed");
}

}  // namespace

void write_dataset(const std::string& path, const Dataset& ds) {
  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw IoError("cannot open for write: " + path);
  if (std::fwrite(kMagic, 1, 8, f.get()) != 8)
    throw IoError("dataset write failed");
  put_u64(f.get(), static_cast<std::uint64_t>(ds.n()));
  put_u64(f.get(), static_cast<std::uint64_t>(ds.m()));
  put_u64(f.get(), ds.seed);
  put_u64(f.get(), ds.parent_seed);
  put_u64(f.get(), static_cast<std::uint64_t>(ds.provenance));
  put_f64(f.get(), ds.q);
  put_f64(f.get(), ds.delta);
  put_u64(f.get(), ds.mu.has_value() ? 1 : 0);
  put_u64(f.get(), ds.zeta.size() > 0 ? 1 : 0);
  put_block(f.get(), ds.samples);
  if (ds.mu) {
    MatrixXd mu = *ds.mu;
    put_block(f.get(), mu);
  }
  if (ds.zeta.size() > 0) put_block(f.get(), ds.zeta);
}

Dataset read_dataset(const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw IoError("cannot open for read: " + path);
  char magic[8];
  if (std::fread(magic, 1, 8, f.get()) != 8 ||
      std::memcmp(magic, kMagic, 8) != 0)
    throw IoError("not a dataset container: " + path);
  Dataset ds;
  const std::uint64_t n = get_u64(f.get());
  const std::uint64_t m = get_u64(f.get());
  ds.seed = get_u64(f.get());
  ds.parent_seed = get_u64(f.get());
  ds.provenance = static_cast<Provenance>(get_u64(f.get()));
  ds.q = get_f64(f.get());
  ds.delta = get_f64(f.get());
  const bool has_mu = get_u64(f.get()) != 0;
  const bool has_zeta = get_u64(f.get()) != 0;
  ds.samples.resize(static_cast<int>(n), static_cast<int>(m));
  get_block(f.get(), ds.samples);
  if (has_mu) {
    MatrixXd mu(static_cast<int>(n), 1);
    get_block(f.get(), mu);
    ds.mu = mu.col(0);
  }
  if (has_zeta) {
    ds.zeta.resize(static_cast<int>(n), static_cast<int>(m));
    get_block(f.get(), ds.zeta);
  }
  return ds;
}

}  // namespace rsub
