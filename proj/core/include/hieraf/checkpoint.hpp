#ifndef HIERAF_CHECKPOINT_HPP_
#define HIERAF_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace hieraf {

// Container layout (all integers unsigned 32-bit little-endian):
//
//   "DASH" | version | block count | block...
//   block = name length | name bytes | rank | dims[rank] | float32 LE data
//
// A rank-0 block holds one value.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Block {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<float> data;

  std::size_t element_count() const;
  friend bool operator==(const Block&, const Block&) = default;
};

using Blocks = std::vector<Block>;

// Serialized bytes. Throws CheckpointError if a block's data length does not
// match its dims or a name repeats.
std::vector<char> encode_checkpoint(const Blocks& blocks);
// Throws CheckpointError on bad magic, version mismatch, truncation or
// trailing bytes; never returns partial state.
Blocks decode_checkpoint(const std::vector<char>& bytes);

// Writes to a sibling temporary file and renames it into place.
void save_checkpoint(const std::filesystem::path& path, const Blocks& blocks);
Blocks load_checkpoint(const std::filesystem::path& path);

// Throws CheckpointError when absent.
const Block& find_block(const Blocks& blocks, const std::string& name);
bool has_block(const Blocks& blocks, const std::string& name);

// 64-bit integers travel as four exact 16-bit chunks.
Block u64_block(std::string name, std::uint64_t value);
std::uint64_t block_u64(const Block& block);

}  // namespace hieraf

#endif  // HIERAF_CHECKPOINT_HPP_
