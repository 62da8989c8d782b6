#include "wspkit/nn/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "wspkit/errors.hpp"
#include "wspkit/io.hpp"

namespace wspkit::nn {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint io assumes a little-endian host");

constexpr char kMagic[4] = {'W', 'S', 'P', 'K'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <class T>
T take(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw DataError("truncated checkpoint");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

void append_entry(std::string& out, const std::string& name, const Tensor& t, DType dtype) {
  put<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
  out += name;
  put<std::uint8_t>(out, static_cast<std::uint8_t>(dtype));
  put<std::uint8_t>(out, static_cast<std::uint8_t>(t.rank()));
  for (std::size_t e : t.shape()) put<std::uint64_t>(out, static_cast<std::uint64_t>(e));
  if (dtype == DType::f64) {
    for (std::size_t i = 0; i < t.size(); ++i) put<double>(out, t[i]);
  } else {
    for (std::size_t i = 0; i < t.size(); ++i) put<float>(out, static_cast<float>(t[i]));
  }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ParamStore& params, DType dtype) {
  CheckpointMap entries;
  for (const auto& [name, p] : params) entries[name] = CheckpointEntry{p.value, dtype};
  save_checkpoint(path, entries);
}

void save_checkpoint(const std::filesystem::path& path, const CheckpointMap& entries) {
  std::string out;
  out.append(kMagic, 4);
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(entries.size()));
  for (const auto& [name, e] : entries) append_entry(out, name, e.tensor, e.dtype);
  atomic_write_file(path, out);
}

CheckpointMap load_checkpoint(const std::filesystem::path& path) {
  const std::string in = read_file(path);
  std::size_t pos = 0;
  if (in.size() < 4 || std::memcmp(in.data(), kMagic, 4) != 0)
    throw DataError("not a WSPK checkpoint: " + path.string());
  pos = 4;
  const auto version = take<std::uint32_t>(in, pos);
  if (version != kVersion)
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  const auto count = take<std::uint32_t>(in, pos);
  CheckpointMap entries;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = take<std::uint16_t>(in, pos);
    if (pos + name_len > in.size()) throw DataError("truncated checkpoint");
    std::string name = in.substr(pos, name_len);
    pos += name_len;
    const auto dtype_raw = take<std::uint8_t>(in, pos);
    if (dtype_raw > 1) throw DataError("unknown dtype in checkpoint entry " + name);
    const DType dtype = static_cast<DType>(dtype_raw);
    const auto ndim = take<std::uint8_t>(in, pos);
    std::vector<std::size_t> shape(ndim);
    for (auto& e : shape) e = static_cast<std::size_t>(take<std::uint64_t>(in, pos));
    Tensor t(shape);
    for (std::size_t k = 0; k < t.size(); ++k)
      t[k] = dtype == DType::f64 ? take<double>(in, pos)
                                 : static_cast<double>(take<float>(in, pos));
    entries[name] = CheckpointEntry{std::move(t), dtype};
  }
  if (pos != in.size()) throw DataError("trailing bytes in checkpoint: " + path.string());
  return entries;
}

std::size_t restore_prefix(ParamStore& params, const CheckpointMap& ckpt,
                           const std::string& prefix) {
  std::size_t restored = 0;
  std::string mismatched;
  for (auto& [name, p] : params) {
    if (name.rfind(prefix, 0) != 0) continue;
    auto it = ckpt.find(name);
    if (it == ckpt.end() || !it->second.tensor.same_shape(p.value)) {
      mismatched += (mismatched.empty() ? "" : ", ") + name;
      if (it != ckpt.end())
        mismatched += " (shape " + shape_string(it->second.tensor.shape()) + " vs " +
                      shape_string(p.value.shape()) + ")";
      continue;
    }
    p.value = it->second.tensor;
    ++restored;
  }
  if (!mismatched.empty())
    throw DataError("checkpoint incompatible with model, mismatched tensors: " + mismatched);
  return restored;
}

}  // namespace wspkit::nn
