#pragma once

// On-disk dataset cache: a directory holding manifest.txt plus one binary
// file per split. Split files are "COOPWIN1", then count/rows/cols as
// little-endian uint64, then the raw doubles of every window in order.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "coop/data/series.hpp"
#include "coop/util/files.hpp"

namespace coop::data {

static_assert(std::endian::native == std::endian::little, "cache format assumes a little-endian host");

inline constexpr char kWindowMagic[8] = {'C', 'O', 'O', 'P', 'W', 'I', 'N', '1'};
inline constexpr int kCacheFormatVersion = 1;

namespace detail {

inline void put_u64(std::string& buf, std::uint64_t v) {
  char b[8];
  std::memcpy(b, &v, 8);
  buf.append(b, 8);
}

inline std::uint64_t get_u64(const std::string& buf, std::size_t& pos) {
  if (pos + 8 > buf.size()) throw DataError("truncated window file");
  std::uint64_t v;
  std::memcpy(&v, buf.data() + pos, 8);
  pos += 8;
  return v;
}

inline std::string encode_windows(const std::vector<Tensor>& windows, std::size_t rows, std::size_t cols) {
  std::string buf(kWindowMagic, 8);
  put_u64(buf, windows.size());
  put_u64(buf, rows);
  put_u64(buf, cols);
  for (const auto& w : windows) {
    buf.append(reinterpret_cast<const char*>(w.storage().data()), w.size() * sizeof(double));
  }
  return buf;
}

inline std::vector<Tensor> decode_windows(const std::string& buf, std::size_t rows, std::size_t cols) {
  if (buf.size() < 8 || std::memcmp(buf.data(), kWindowMagic, 8) != 0) throw DataError("bad window file magic");
  std::size_t pos = 8;
  const auto count = get_u64(buf, pos);
  const auto r = get_u64(buf, pos);
  const auto c = get_u64(buf, pos);
  if (r != rows || c != cols) throw DataError("window file shape does not match manifest");
  const std::size_t per = rows * cols;
  if (buf.size() != pos + count * per * sizeof(double)) throw DataError("window file size does not match its header");
  std::vector<Tensor> out;
  out.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::vector<double> d(per);
    std::memcpy(d.data(), buf.data() + pos, per * sizeof(double));
    pos += per * sizeof(double);
    out.emplace_back(Tensor::Shape{rows, cols}, std::move(d));
  }
  return out;
}

inline std::string join(const std::vector<std::string>& v, char sep = ',') {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? std::string(1, sep) : "") + v[i];
  return s;
}

}  // namespace detail

/// Parses "key = value" lines; '#' starts a comment line.
inline std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) continue;
    kv[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return kv;
}

/// Writes the cache; `provenance` lines (already "key = value") are appended to the manifest.
inline void save_dataset_cache(const std::filesystem::path& dir, const TimeSeriesDataset& ds, std::uint64_t seed,
                               const std::vector<std::string>& provenance = {}) {
  ds.validate();
  std::filesystem::create_directories(dir);
  std::ostringstream m;
  m << "format_version = " << kCacheFormatVersion << "\n";
  m << "input_len = " << ds.input_len << "\n";
  m << "output_len = " << ds.output_len << "\n";
  m << "channels = " << ds.channels << "\n";
  m << "channel_names = " << detail::join(ds.channel_names) << "\n";
  m << "seed = " << seed << "\n";
  for (Split s : {Split::train, Split::val, Split::test}) {
    m << split_name(s) << "_count = " << ds.split(s).size() << "\n";
  }
  for (const auto& line : provenance) m << line << "\n";
  for (Split s : {Split::train, Split::val, Split::test}) {
    write_file_atomic(dir / (std::string(split_name(s)) + ".bin"),
                      detail::encode_windows(ds.split(s), ds.window_len(), ds.channels));
  }
  write_file_atomic(dir / "manifest.txt", m.str());
}

inline TimeSeriesDataset load_dataset_cache(const std::filesystem::path& dir) {
  const auto kv = parse_key_values(read_file(dir / "manifest.txt"));
  auto need = [&](const std::string& k) -> const std::string& {
    const auto it = kv.find(k);
    if (it == kv.end()) throw DataError("dataset manifest is missing '" + k + "'");
    return it->second;
  };
  if (std::stoi(need("format_version")) != kCacheFormatVersion) throw DataError("unsupported dataset cache version");
  TimeSeriesDataset ds;
  ds.input_len = std::stoul(need("input_len"));
  ds.output_len = std::stoul(need("output_len"));
  ds.channels = std::stoul(need("channels"));
  const std::string names = need("channel_names");
  std::stringstream ss(names);
  std::string item;
  while (std::getline(ss, item, ',')) ds.channel_names.push_back(item);
  for (Split s : {Split::train, Split::val, Split::test}) {
    ds.split(s) = detail::decode_windows(read_file(dir / (std::string(split_name(s)) + ".bin")), ds.window_len(),
                                         ds.channels);
    if (ds.split(s).size() != std::stoul(need(std::string(split_name(s)) + "_count"))) {
      throw DataError("dataset manifest count disagrees with split file");
    }
  }
  ds.validate();
  return ds;
}

}  // namespace coop::data
