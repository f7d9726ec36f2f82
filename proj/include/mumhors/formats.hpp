#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>

#include "mumhors/signer.hpp"
#include "mumhors/verifier.hpp"

namespace mumhors {

// "MSG1" | k x 32-byte elements | ctr (4 BE)
Bytes encode_signature(const Signature& sig);
Signature decode_signature(ByteView data);

// "MSK1" | msk (16) | pad1..pad3 (16 each) | MBM1 bitmap
Bytes encode_signer_state(const SignerState& st);
/// k and r are not part of the encoding and come from `params`; t and rt must agree with
/// the embedded bitmap.
SignerState decode_signer_state(ByteView data, const SchemeParams& params, BitmapBackend backend);

/// Public-key file. Header: "MPK1" | t (2) | k (2) | l (2) | r (4) | rt (2) | mode (1) |
/// pad1..pad3 (16 each). Full mode (0) continues with r records of num (4) + t x 32-byte keys.
/// Lazy mode (1) continues with the 16-byte msk, from which the verifier re-derives keys.
enum class KeyFileMode : std::uint8_t { full = 0, lazy = 1 };

struct KeyFileHeader {
  SchemeParams params;
  KeyFileMode mode = KeyFileMode::full;
  Pads pads{};
  std::optional<Secret128> msk;  ///< lazy mode only
  static constexpr std::size_t encoded_size = 4 + 2 + 2 + 2 + 4 + 2 + 1 + 48;
};

/// Streams the file to `path`; full mode derives and writes all r*t keys.
void write_key_file(const std::filesystem::path& path, const SchemeParams& params, const KeyMaterial& keys,
                    KeyFileMode mode);
KeyFileHeader read_key_file_header(const std::filesystem::path& path);

/// Reads rows of a full-mode key file on demand.
class FileKeySource final : public KeySource {
 public:
  explicit FileKeySource(std::filesystem::path path);
  std::vector<Digest256> row(std::uint32_t num) const override;
  std::uint32_t total_rows() const override { return header_.params.r; }
  std::uint32_t t() const override { return header_.params.t; }
  const KeyFileHeader& header() const { return header_; }

 private:
  std::filesystem::path path_;
  KeyFileHeader header_;
};

/// Key source for whichever mode the file uses.
std::shared_ptr<const KeySource> open_key_source(const std::filesystem::path& path, KeyFileHeader* header = nullptr);

// "MVS1" | t (2) | rt (2) | nextrow (4) | activerows (2) | per row: num (4) + activepks (2) + t state bytes
Bytes encode_verifier_state(const PublicKeyStore& store);
void decode_verifier_state(ByteView data, PublicKeyStore& store);

Bytes read_file(const std::filesystem::path& path);
/// Writes to a sibling temporary, fsyncs it, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, ByteView data);

}  // namespace mumhors
