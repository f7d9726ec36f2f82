#include <filesystem>
#include <fstream>

#include <unistd.h>

#include "doctest.h"
#include "mumhors/errors.hpp"
#include "mumhors/formats.hpp"

using namespace mumhors;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("mumhors-formats-" + std::to_string(::getpid()) + "-" +
                                        std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

Bytes msg(int i) {
  const auto d = blake2b_256(as_bytes("fmt " + std::to_string(i)));
  return Bytes(d.begin(), d.end());
}

}  // namespace

TEST_CASE("signature encoding") {
  auto pair = mum_kg(SchemeParams::standard(), expand_seed(as_bytes("sig-enc")));
  const auto res = mum_sig(pair.signer, msg(1));
  const auto enc = encode_signature(res.sig);
  CHECK(enc.size() == 4 + 25 * 32 + 4);
  CHECK(decode_signature(enc) == res.sig);

  CHECK_THROWS_AS(decode_signature(Bytes{}), ParseError);
  Bytes bad_magic = enc;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(decode_signature(bad_magic), ParseError);
  Bytes ragged = enc;
  ragged.pop_back();
  CHECK_THROWS_AS(decode_signature(ragged), ParseError);
}

TEST_CASE("signer state encoding is byte-stable for both backends") {
  const auto p = SchemeParams::desk();
  for (auto backend : {BitmapBackend::queue, BitmapBackend::list}) {
    SignerState st(p, expand_seed(as_bytes("state")), backend);
    for (int i = 0; i < 30; ++i) post_sign(st, mum_sig(st, msg(i)).derivation);
    const auto enc = encode_signer_state(st);
    auto back = decode_signer_state(enc, p, backend);
    CHECK(encode_signer_state(back) == enc);
    CHECK(back.keys().msk == st.keys().msk);
    CHECK(back.bitmap().enumerate() == st.bitmap().enumerate());
    CHECK(mum_sig(back, msg(99)).sig == mum_sig(st, msg(99)).sig);

    auto other = decode_signer_state(enc, p, backend == BitmapBackend::queue ? BitmapBackend::list : BitmapBackend::queue);
    CHECK(encode_signer_state(other) == enc);

    SchemeParams wrong = p;
    wrong.rt = 5;
    CHECK_THROWS_AS(decode_signer_state(enc, wrong, backend), ParseError);
    Bytes cut(enc.begin(), enc.end() - 3);
    CHECK_THROWS_AS(decode_signer_state(cut, p, backend), ParseError);
    Bytes magic = enc;
    magic[3] = '9';
    CHECK_THROWS_AS(decode_signer_state(magic, p, backend), ParseError);
  }
}

TEST_CASE("key files in full and lazy mode") {
  TempDir dir;
  const auto p = SchemeParams::desk();
  const auto km = expand_seed(as_bytes("keyfile"));
  const auto full = dir.path / "full.pk";
  const auto lazy = dir.path / "lazy.pk";
  write_key_file(full, p, km, KeyFileMode::full);
  write_key_file(lazy, p, km, KeyFileMode::lazy);
  CHECK(fs::file_size(full) == KeyFileHeader::encoded_size + 64 * (4 + 16 * 32));
  CHECK(fs::file_size(lazy) == KeyFileHeader::encoded_size + 16);
  CHECK_FALSE(fs::exists(dir.path / "full.pk.tmp"));

  KeyFileHeader hf, hl;
  const auto sf = open_key_source(full, &hf);
  const auto sl = open_key_source(lazy, &hl);
  CHECK(hf.mode == KeyFileMode::full);
  CHECK_FALSE(hf.msk.has_value());
  CHECK(hl.mode == KeyFileMode::lazy);
  CHECK(hl.msk == km.msk);
  CHECK(hf.pads == km.pads);
  CHECK(hf.params == p);
  DerivedKeySource ref(km.msk, p.t, p.r);
  for (std::uint32_t i = 1; i <= p.r; ++i) {
    REQUIRE(sf->row(i) == ref.row(i));
    REQUIRE(sl->row(i) == ref.row(i));
  }
  CHECK_THROWS_AS(sf->row(0), OutOfRange);
  CHECK_THROWS_AS(sf->row(65), OutOfRange);

  // Truncated and padded files are rejected on open.
  const auto bytes = read_file(full);
  const auto cut = dir.path / "cut.pk";
  write_file_atomic(cut, ByteView(bytes.data(), bytes.size() - 1));
  CHECK_THROWS_AS(read_key_file_header(cut), ParseError);
  Bytes grown = bytes;
  grown.push_back(0);
  write_file_atomic(cut, grown);
  CHECK_THROWS_AS(open_key_source(cut), ParseError);
  Bytes mode = read_file(lazy);
  mode[16] = 7;
  write_file_atomic(cut, mode);
  CHECK_THROWS_AS(read_key_file_header(cut), ParseError);
}

TEST_CASE("verifier state roundtrip keeps doubt slots") {
  const auto p = SchemeParams::desk();
  const auto km = expand_seed(as_bytes("vstate"));
  auto pair = mum_kg(p, km);
  for (int i = 1; i <= 12; ++i) {
    const auto res = mum_sig(pair.signer, msg(i));
    post_sign(pair.signer, res.derivation);
    Signature sent = res.sig;
    if (i == 12) sent.elems[0][0] ^= 1;
    sca_verify(pair.store, msg(i), sent);
    pair.store.extend_view();
  }
  REQUIRE(pair.store.doubt_count() > 0);
  const auto enc = encode_verifier_state(pair.store);
  auto fresh = mum_kg(p, km);
  decode_verifier_state(enc, fresh.store);
  CHECK(encode_verifier_state(fresh.store) == enc);
  CHECK(fresh.store.doubt_count() == pair.store.doubt_count());
  CHECK(fresh.store.activepks() == pair.store.activepks());

  Bytes bad = enc;
  bad.back() = 9;
  CHECK_THROWS_AS(decode_verifier_state(bad, fresh.store), ParseError);
  CHECK_THROWS_AS(decode_verifier_state(Bytes(enc.begin(), enc.begin() + 10), fresh.store), ParseError);
  auto other = mum_kg(SchemeParams::standard(), km);
  CHECK_THROWS_AS(decode_verifier_state(enc, other.store), ParseError);
}

TEST_CASE("file helpers") {
  TempDir dir;
  const auto f = dir.path / "state.bin";
  write_file_atomic(f, as_bytes("one"));
  write_file_atomic(f, as_bytes("second"));
  const auto back = read_file(f);
  CHECK(std::string(back.begin(), back.end()) == "second");
  CHECK_THROWS_AS(read_file(dir.path / "missing"), Error);
  for (const auto& e : fs::directory_iterator(dir.path)) CHECK(e.path().filename() == "state.bin");
}
