#include "hieraf/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>

#include "hieraf/error.hpp"

namespace hieraf {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");
static_assert(sizeof(float) == 4);

namespace {

constexpr char kMagic[4] = {'D', 'A', 'S', 'H'};

void put_u32(std::vector<char>& out, std::uint32_t v) {
  const char* p = reinterpret_cast<const char*>(&v);
  out.insert(out.end(), p, p + 4);
}

class Reader {
 public:
  explicit Reader(const std::vector<char>& bytes) : bytes_(bytes) {}

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw CheckpointError(std::string("checkpoint truncated while reading ") + what);
    }
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v;
    std::memcpy(&v, bytes_.data() + pos_, 4);
    pos_ += 4;
    return v;
  }
  void copy(void* dst, std::size_t n, const char* what) {
    need(n, what);
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::vector<char>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::size_t Block::element_count() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

std::vector<char> encode_checkpoint(const Blocks& blocks) {
  std::set<std::string> names;
  std::vector<char> out(kMagic, kMagic + 4);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(blocks.size()));
  for (const auto& b : blocks) {
    if (!names.insert(b.name).second) throw CheckpointError("duplicate block name '" + b.name + "'");
    if (b.data.size() != b.element_count()) {
      throw CheckpointError("block '" + b.name + "' data length does not match its dims");
    }
    put_u32(out, static_cast<std::uint32_t>(b.name.size()));
    out.insert(out.end(), b.name.begin(), b.name.end());
    put_u32(out, static_cast<std::uint32_t>(b.dims.size()));
    for (auto d : b.dims) put_u32(out, d);
    const char* p = reinterpret_cast<const char*>(b.data.data());
    out.insert(out.end(), p, p + b.data.size() * 4);
  }
  return out;
}

Blocks decode_checkpoint(const std::vector<char>& bytes) {
  Reader in(bytes);
  char magic[4];
  in.copy(magic, 4, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0) throw CheckpointError("not a checkpoint: bad magic");
  const auto version = in.u32("version");
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint version " + std::to_string(version) + " unsupported (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  }
  const auto count = in.u32("block count");
  Blocks blocks;
  for (std::uint32_t i = 0; i < count; ++i) {
    Block b;
    const auto len = in.u32("name length");
    in.need(len, "block name");
    b.name.resize(len);
    in.copy(b.name.data(), len, "block name");
    const auto rank = in.u32("rank");
    in.need(std::size_t{rank} * 4, "dims");
    for (std::uint32_t r = 0; r < rank; ++r) b.dims.push_back(in.u32("dims"));
    std::size_t n = 1;
    for (auto d : b.dims) {
      if (d != 0 && n > bytes.size() / d) throw CheckpointError("checkpoint truncated while reading block data");
      n *= d;
    }
    in.need(n * 4, "block data");
    b.data.resize(n);
    in.copy(b.data.data(), n * 4, "block data");
    blocks.push_back(std::move(b));
  }
  if (!in.done()) throw CheckpointError("checkpoint has trailing bytes after the last block");
  return blocks;
}

void save_checkpoint(const std::filesystem::path& path, const Blocks& blocks) {
  const auto bytes = encode_checkpoint(blocks);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Blocks load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

const Block& find_block(const Blocks& blocks, const std::string& name) {
  for (const auto& b : blocks) {
    if (b.name == name) return b;
  }
  throw CheckpointError("checkpoint has no block '" + name + "'");
}

bool has_block(const Blocks& blocks, const std::string& name) {
  for (const auto& b : blocks) {
    if (b.name == name) return true;
  }
  return false;
}

Block u64_block(std::string name, std::uint64_t value) {
  Block b{std::move(name), {4}, {}};
  for (int i = 0; i < 4; ++i) b.data.push_back(static_cast<float>((value >> (16 * i)) & 0xFFFF));
  return b;
}

std::uint64_t block_u64(const Block& block) {
  if (block.data.size() != 4) throw CheckpointError("block '" + block.name + "' is not a 64-bit integer");
  std::uint64_t v = 0;
  for (int i = 0; i < 4; ++i) {
    const float f = block.data[i];
    if (!(f >= 0.0f && f <= 65535.0f) || f != static_cast<float>(static_cast<std::uint32_t>(f))) {
      throw CheckpointError("block '" + block.name + "' holds a malformed integer chunk");
    }
    v |= static_cast<std::uint64_t>(f) << (16 * i);
  }
  return v;
}

}  // namespace hieraf
