#include "mumhors/formats.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>

namespace mumhors {
namespace {

constexpr std::size_t kElement = 32;

template <std::size_t N>
std::array<std::uint8_t, N> take_array(ByteReader& in) {
  auto v = in.take(N);
  std::array<std::uint8_t, N> out;
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

void encode_header(Bytes& out, const SchemeParams& p, KeyFileMode mode, const Pads& pads) {
  put_bytes(out, as_bytes("MPK1"));
  put_u16(out, static_cast<std::uint16_t>(p.t));
  put_u16(out, static_cast<std::uint16_t>(p.k));
  put_u16(out, static_cast<std::uint16_t>(p.l));
  put_u32(out, p.r);
  put_u16(out, static_cast<std::uint16_t>(p.rt));
  out.push_back(static_cast<std::uint8_t>(mode));
  for (const auto& pad : pads) put_bytes(out, pad);
}

[[noreturn]] void io_error(const std::string& what, const std::filesystem::path& path) {
  throw Error(what + " '" + path.string() + "': " + std::strerror(errno));
}

}  // namespace

Bytes encode_signature(const Signature& sig) {
  Bytes out;
  put_bytes(out, as_bytes("MSG1"));
  for (const auto& e : sig.elems) put_bytes(out, e);
  put_u32(out, sig.ctr);
  return out;
}

Signature decode_signature(ByteView data) {
  if (data.size() < 8 || (data.size() - 8) % kElement != 0) throw ParseError("signature length is not 8 + 32k");
  ByteReader in(data);
  in.expect_magic("MSG1");
  Signature sig;
  sig.elems.resize((data.size() - 8) / kElement);
  for (auto& e : sig.elems) e = take_array<kElement>(in);
  sig.ctr = in.u32();
  in.expect_end();
  return sig;
}

Bytes encode_signer_state(const SignerState& st) {
  Bytes out;
  put_bytes(out, as_bytes("MSK1"));
  put_bytes(out, st.keys().msk);
  for (const auto& pad : st.keys().pads) put_bytes(out, pad);
  serialize_bitmap(st.bitmap(), out);
  return out;
}

SignerState decode_signer_state(ByteView data, const SchemeParams& params, BitmapBackend backend) {
  ByteReader in(data);
  in.expect_magic("MSK1");
  KeyMaterial keys;
  keys.msk = take_array<16>(in);
  for (auto& pad : keys.pads) pad = take_array<16>(in);
  auto bm = deserialize_bitmap(in, backend);
  in.expect_end();
  if (bm->t() != params.t || bm->rt() != params.rt)
    throw ParseError("state file bitmap (t=" + std::to_string(bm->t()) + ", rt=" + std::to_string(bm->rt()) +
                     ") does not match parameters");
  try {
    return SignerState(params, keys, std::move(bm));
  } catch (const InvalidParameter& e) {
    throw ParseError(std::string("state file inconsistent with parameters: ") + e.what());
  }
}

void write_key_file(const std::filesystem::path& path, const SchemeParams& params, const KeyMaterial& keys,
                    KeyFileMode mode) {
  params.validate();
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) io_error("cannot create", tmp);
    Bytes header;
    encode_header(header, params, mode, keys.pads);
    if (mode == KeyFileMode::lazy) {
      put_bytes(header, keys.msk);
      f.write(reinterpret_cast<const char*>(header.data()), static_cast<std::streamsize>(header.size()));
    } else {
      f.write(reinterpret_cast<const char*>(header.data()), static_cast<std::streamsize>(header.size()));
      DerivedKeySource source(keys.msk, params.t, params.r);
      Bytes record;
      for (std::uint32_t num = 1; num <= params.r; ++num) {
        record.clear();
        put_u32(record, num);
        for (const auto& key : source.row(num)) put_bytes(record, key);
        f.write(reinterpret_cast<const char*>(record.data()), static_cast<std::streamsize>(record.size()));
      }
    }
    if (!f.flush()) io_error("cannot write", tmp);
  }
  std::filesystem::rename(tmp, path);
}

namespace {

KeyFileHeader parse_header(ByteReader& in) {
  in.expect_magic("MPK1");
  KeyFileHeader h;
  h.params.t = in.u16();
  h.params.k = in.u16();
  h.params.l = in.u16();
  h.params.r = in.u32();
  h.params.rt = in.u16();
  const auto mode = in.u8();
  if (mode > 1) throw ParseError("unknown key file mode");
  h.mode = static_cast<KeyFileMode>(mode);
  for (auto& pad : h.pads) pad = take_array<16>(in);
  try {
    h.params.validate();
  } catch (const InvalidParameter& e) {
    throw ParseError(std::string("key file parameters invalid: ") + e.what());
  }
  if (h.mode == KeyFileMode::lazy) h.msk = take_array<16>(in);
  return h;
}

}  // namespace

KeyFileHeader read_key_file_header(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) io_error("cannot open", path);
  Bytes buf(KeyFileHeader::encoded_size + 16);
  f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  buf.resize(static_cast<std::size_t>(f.gcount()));
  ByteReader in(buf);
  KeyFileHeader h = parse_header(in);
  const auto size = std::filesystem::file_size(path);
  const std::uint64_t expected =
      h.mode == KeyFileMode::lazy
          ? KeyFileHeader::encoded_size + 16
          : KeyFileHeader::encoded_size + std::uint64_t{h.params.r} * (4 + std::uint64_t{h.params.t} * kElement);
  if (size != expected)
    throw ParseError("key file is " + std::to_string(size) + " bytes, expected " + std::to_string(expected));
  return h;
}

FileKeySource::FileKeySource(std::filesystem::path path) : path_(std::move(path)), header_(read_key_file_header(path_)) {
  if (header_.mode != KeyFileMode::full) throw ParseError("key file is not in full mode");
}

std::vector<Digest256> FileKeySource::row(std::uint32_t num) const {
  const auto& p = header_.params;
  if (num == 0 || num > p.r) throw OutOfRange("row " + std::to_string(num) + " outside the key file");
  const std::uint64_t record = 4 + std::uint64_t{p.t} * kElement;
  std::ifstream f(path_, std::ios::binary);
  if (!f) io_error("cannot open", path_);
  f.seekg(static_cast<std::streamoff>(KeyFileHeader::encoded_size + (num - 1) * record));
  Bytes buf(record);
  if (!f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(record)))
    throw ParseError("key file truncated at row " + std::to_string(num));
  ByteReader in(buf);
  if (in.u32() != num) throw ParseError("key file row " + std::to_string(num) + " has a mismatched number");
  std::vector<Digest256> keys(p.t);
  for (auto& k : keys) k = take_array<kElement>(in);
  return keys;
}

std::shared_ptr<const KeySource> open_key_source(const std::filesystem::path& path, KeyFileHeader* header) {
  KeyFileHeader h = read_key_file_header(path);
  if (header) *header = h;
  if (h.mode == KeyFileMode::lazy) return std::make_shared<DerivedKeySource>(*h.msk, h.params.t, h.params.r);
  return std::make_shared<FileKeySource>(path);
}

Bytes encode_verifier_state(const PublicKeyStore& store) {
  Bytes out;
  put_bytes(out, as_bytes("MVS1"));
  put_u16(out, static_cast<std::uint16_t>(store.params().t));
  put_u16(out, static_cast<std::uint16_t>(store.params().rt));
  put_u32(out, store.nextrow());
  put_u16(out, static_cast<std::uint16_t>(store.activerows()));
  for (const auto& row : store.rows()) {
    put_u32(out, row.num);
    put_u16(out, static_cast<std::uint16_t>(row.activepks));
    for (const auto& slot : row.slots) out.push_back(static_cast<std::uint8_t>(slot.state));
  }
  return out;
}

void decode_verifier_state(ByteView data, PublicKeyStore& store) {
  ByteReader in(data);
  in.expect_magic("MVS1");
  const std::uint32_t t = in.u16();
  const std::uint32_t rt = in.u16();
  if (t != store.params().t || rt != store.params().rt) throw ParseError("verifier state geometry mismatch");
  const std::uint32_t nextrow = in.u32();
  const std::uint32_t count = in.u16();
  std::vector<PublicKeyStore::RowState> rows(count);
  for (auto& row : rows) {
    row.num = in.u32();
    const std::uint32_t active = in.u16();
    auto raw = in.take(t);
    std::uint32_t seen = 0;
    row.states.reserve(t);
    for (auto b : raw) {
      if (b > 2) throw ParseError("invalid slot state byte");
      row.states.push_back(static_cast<SlotState>(b));
      if (b != 0) ++seen;
    }
    if (seen != active) throw ParseError("verifier row activepks mismatch");
  }
  in.expect_end();
  store.restore(rows, nextrow);
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) io_error("cannot open", path);
  return Bytes(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

void write_file_atomic(const std::filesystem::path& path, ByteView data) {
  const auto tmp = path.string() + ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0600);
  if (fd < 0) io_error("cannot create", tmp);
  std::size_t done = 0;
  while (done < data.size()) {
    const ssize_t n = ::write(fd, data.data() + done, data.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      io_error("cannot write", tmp);
    }
    done += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0) {
    ::close(fd);
    io_error("cannot sync", tmp);
  }
  ::close(fd);
  std::filesystem::rename(tmp, path);
}

}  // namespace mumhors
