#include "energon/checkpoint.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "energon/errors.hpp"

namespace energon {

namespace {

constexpr char kMagic[] = "energon-checkpoint-v1";

std::uint64_t fnv1a64(const unsigned char* data, std::size_t n) {
  std::uint64_t h = 14695981039346656037ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 1099511628211ull;
  }
  return h;
}

void put_u64_le(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
std::string join_ints(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out.push_back(',');
    out += std::to_string(static_cast<long long>(values[i]));
  }
  return out;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  if (s.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = s.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, comma - start));
    start = comma + 1;
  }
}

// Every tensor, running statistics included, in declaration order.
std::vector<std::pair<double*, Eigen::Index>> tensor_list(CnnModel& m) {
  std::vector<std::pair<double*, Eigen::Index>> t;
  for (auto& blk : m.blocks) {
    t.emplace_back(blk.w.data(), blk.w.size());
    t.emplace_back(blk.b.data(), blk.b.size());
    t.emplace_back(blk.bn_scale.data(), blk.bn_scale.size());
    t.emplace_back(blk.bn_shift.data(), blk.bn_shift.size());
    t.emplace_back(blk.bn_run_mean.data(), blk.bn_run_mean.size());
    t.emplace_back(blk.bn_run_var.data(), blk.bn_run_var.size());
  }
  t.emplace_back(m.fc1.w.data(), m.fc1.w.size());
  t.emplace_back(m.fc1.b.data(), m.fc1.b.size());
  t.emplace_back(m.fc2.w.data(), m.fc2.w.size());
  t.emplace_back(m.fc2.b.data(), m.fc2.b.size());
  return t;
}

}  // namespace

void save_checkpoint(const std::string& path, const CnnModel& model,
                     const CheckpointInfo& info) {
  for (const auto& c : info.classes)
    if (c.find(',') != std::string::npos || c.find('\n') != std::string::npos)
      throw DataError("class name '" + c + "' cannot be serialized");

  const CnnSpec& s = model.spec;
  std::ostringstream header;
  header << kMagic << "\n";
  header << "stage=" << info.stage << "\n";
  header << "taxonomy=" << info.taxonomy << "\n";
  header << "classes=";
  for (std::size_t i = 0; i < info.classes.size(); ++i)
    header << (i ? "," : "") << info.classes[i];
  header << "\n";
  header << "conv_filters=" << join_ints(s.conv_filters) << "\n";
  header << "kernel_size=" << s.kernel_size << "\n";
  {
    std::vector<int> pools;
    for (bool p : s.pool_after) pools.push_back(p ? 1 : 0);
    header << "pool_after=" << join_ints(pools) << "\n";
  }
  header << "fc_hidden=" << s.fc_hidden << "\n";
  header << "n_classes=" << s.n_classes << "\n";
  header << "in_channels=" << s.in_channels << "\n";
  header << "input_length=" << s.input_length << "\n";
  header << "bn_momentum=" << fmt_double(s.bn_momentum) << "\n";
  header << "bn_epsilon=" << fmt_double(s.bn_epsilon) << "\n";

  auto tensors = tensor_list(const_cast<CnnModel&>(model));
  Eigen::Index total = 0;
  for (const auto& [ptr, n] : tensors) total += n;
  header << "param_count=" << total << "\n\n";

  std::string payload;
  payload.reserve(static_cast<std::size_t>(total) * 8);
  for (const auto& [ptr, n] : tensors) {
    for (Eigen::Index i = 0; i < n; ++i) {
      std::uint64_t bits;
      std::memcpy(&bits, &ptr[i], 8);
      put_u64_le(payload, bits);
    }
  }
  const std::uint64_t checksum =
      fnv1a64(reinterpret_cast<const unsigned char*>(payload.data()), payload.size());
  std::string tail;
  put_u64_le(tail, checksum);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open checkpoint for writing: " + path);
  const std::string head = header.str();
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  out.write(tail.data(), static_cast<std::streamsize>(tail.size()));
  out.flush();
  if (!out) throw DataError("short write while saving checkpoint: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string data = buf.str();

  // header: magic line, key=value lines, blank line
  std::size_t pos = data.find('\n');
  if (pos == std::string::npos || data.substr(0, pos) != kMagic)
    throw DataError("not a checkpoint file: " + path);
  ++pos;

  std::map<std::string, std::string> kv;
  while (true) {
    const std::size_t eol = data.find('\n', pos);
    if (eol == std::string::npos)
      throw DataError("checkpoint header is not terminated: " + path);
    const std::string line = data.substr(pos, eol - pos);
    pos = eol + 1;
    if (line.empty()) break;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw DataError("malformed checkpoint header line: " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }

  auto need = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw DataError("checkpoint header missing key: " + key);
    return it->second;
  };
  auto to_int = [&](const std::string& key) {
    try {
      return std::stoi(need(key));
    } catch (const std::exception&) {
      throw DataError("checkpoint header key is not an integer: " + key);
    }
  };
  auto to_double = [&](const std::string& key) {
    try {
      return std::stod(need(key));
    } catch (const std::exception&) {
      throw DataError("checkpoint header key is not a number: " + key);
    }
  };

  CnnSpec spec;
  spec.conv_filters.clear();
  for (const auto& tok : split_csv(need("conv_filters")))
    spec.conv_filters.push_back(std::stoi(tok));
  spec.pool_after.clear();
  for (const auto& tok : split_csv(need("pool_after")))
    spec.pool_after.push_back(tok == "1");
  spec.kernel_size = to_int("kernel_size");
  spec.fc_hidden = to_int("fc_hidden");
  spec.n_classes = to_int("n_classes");
  spec.in_channels = to_int("in_channels");
  spec.input_length = to_int("input_length");
  spec.bn_momentum = to_double("bn_momentum");
  spec.bn_epsilon = to_double("bn_epsilon");

  LoadedCheckpoint loaded;
  loaded.model = init_model(spec, 0);
  loaded.info.stage = need("stage");
  loaded.info.taxonomy = need("taxonomy");
  loaded.info.classes = split_csv(need("classes"));

  auto tensors = tensor_list(loaded.model);
  Eigen::Index total = 0;
  for (const auto& [ptr, n] : tensors) total += n;
  const auto declared = static_cast<Eigen::Index>(to_int("param_count"));
  if (declared != total)
    throw DataError("checkpoint parameter count " + std::to_string(declared) +
                    " does not match architecture (" + std::to_string(total) + ")");

  const std::size_t payload_bytes = static_cast<std::size_t>(total) * 8;
  if (data.size() < pos + payload_bytes + 8)
    throw DataError("checkpoint payload is truncated: " + path);
  const auto* bytes = reinterpret_cast<const unsigned char*>(data.data()) + pos;

  const std::uint64_t stored = get_u64_le(bytes + payload_bytes);
  const std::uint64_t computed = fnv1a64(bytes, payload_bytes);
  if (stored != computed) {
    char msg[96];
    std::snprintf(msg, sizeof msg,
                  "checkpoint checksum mismatch (stored %016" PRIx64
                  ", computed %016" PRIx64 ")",
                  stored, computed);
    throw DataError(msg);
  }

  std::size_t off = 0;
  for (auto& [ptr, n] : tensors) {
    for (Eigen::Index i = 0; i < n; ++i, off += 8) {
      const std::uint64_t bits = get_u64_le(bytes + off);
      std::memcpy(&ptr[i], &bits, 8);
    }
  }
  return loaded;
}

}  // namespace energon
