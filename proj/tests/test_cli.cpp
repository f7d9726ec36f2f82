#include <sys/file.h>
#include <sys/wait.h>
#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "mumhors/errors.hpp"
#include "mumhors/formats.hpp"
#include "mumhors/signer.hpp"

using namespace mumhors;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out, err;
};

class Sandbox {
 public:
  Sandbox() {
    dir_ = fs::temp_directory_path() / ("mumhors-cli-" + std::to_string(::getpid()) + "-" + std::to_string(counter_++));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  ~Sandbox() { fs::remove_all(dir_); }

  fs::path operator/(const std::string& name) const { return dir_ / name; }

  Run run(const std::string& args, const std::string& env = "") const {
    const auto out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
    const std::string cmd = "cd '" + dir_.string() + "' && " + env + (env.empty() ? "" : " ") + "'" +
                            MUMHORS_CLI_PATH + "' " + args + " >'" + out.string() + "' 2>'" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  void write(const std::string& name, const std::string& body) const { std::ofstream(dir_ / name, std::ios::binary) << body; }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

 private:
  fs::path dir_;
  static inline int counter_ = 0;
};

const std::string kDesk = "--preset desk";

}  // namespace

TEST_CASE("keygen is deterministic under a fixed seed") {
  Sandbox a, b;
  REQUIRE(a.run("keygen " + kDesk + " --seed 0102 --state s --pk p").code == 0);
  REQUIRE(b.run("keygen " + kDesk + " --state s --pk p", "MUMHORS_SEED=0102").code == 0);
  CHECK(Sandbox::slurp(a / "s") == Sandbox::slurp(b / "s"));
  CHECK(Sandbox::slurp(a / "p") == Sandbox::slurp(b / "p"));
  const auto h = read_key_file_header(a / "p");
  CHECK(h.mode == KeyFileMode::full);
  CHECK(h.params == SchemeParams::desk());

  // --seed wins over the environment.
  REQUIRE(b.run("keygen " + kDesk + " --seed 0102 --state s2 --pk p2", "MUMHORS_SEED=ff").code == 0);
  CHECK(Sandbox::slurp(b / "s2") == Sandbox::slurp(a / "s"));
}

TEST_CASE("keygen falls back to a lazy key file for large parameter sets") {
  Sandbox s;
  const auto r = s.run("keygen --seed 01 --state s --pk p");
  REQUIRE(r.code == 0);
  CHECK(r.err.find("lazy") != std::string::npos);
  CHECK(read_key_file_header(s / "p").mode == KeyFileMode::lazy);
  CHECK(fs::file_size(s / "p") < 1024);
}

TEST_CASE("invalid parameters are usage errors") {
  Sandbox s;
  CHECK(s.run("keygen " + kDesk + " --rt 65 --state s --pk p").code == 2);
  CHECK(s.run("keygen --t 1000 --state s --pk p").code == 2);
  CHECK(s.run("keygen --state s").code == 2);
  CHECK(s.run("frobnicate").code == 2);
  CHECK(s.run("keygen " + kDesk + " --seed zz --state s --pk p").code == 2);
  CHECK_FALSE(fs::exists(s / "s"));
}

TEST_CASE("sign and verify roundtrip") {
  Sandbox s;
  REQUIRE(s.run("keygen --seed 07 --state s --pk p").code == 0);
  s.write("m", "hello sensor");
  const auto sg = s.run("sign --state s -m m -o sig");
  REQUIRE(sg.code == 0);
  CHECK(fs::file_size(s / "sig") == 808);
  const auto vf = s.run("verify --pk p -m m -s sig --vstate v");
  CHECK(vf.code == 0);
  CHECK(vf.out.rfind("accept", 0) == 0);

  s.write("m2", "second");
  REQUIRE(s.run("sign --state s -m m2 -o sig2").code == 0);
  CHECK(s.run("verify --pk p -m m2 -s sig2 --vstate v").code == 0);

  s.write("m3", "third");
  REQUIRE(s.run("sign --state s -m m3 -o sig3").code == 0);
  auto bytes = Sandbox::slurp(s / "sig3");
  bytes[100] = static_cast<char>(bytes[100] ^ 0x04);
  s.write("bad", bytes);
  const auto rej = s.run("verify --pk p -m m3 -s bad --vstate v");
  CHECK(rej.code == 1);
  CHECK(rej.out.rfind("reject", 0) == 0);
  CHECK(s.run("verify --pk p -m m3 -s sig3 --vstate v").code == 0);

  s.write("junk", "MSG1abc");
  CHECK(s.run("verify --pk p -m m3 -s junk").code == 2);
}

TEST_CASE("signing past capacity stops with exit code 3") {
  Sandbox s;
  REQUIRE(s.run("keygen " + kDesk + " --seed 0badcafe --state s --pk p").code == 0);

  // In-library replay of the same message sequence.
  SignerState ref(SchemeParams::desk(), expand_seed(from_hex("0badcafe")));
  std::uint64_t expected = 0;
  for (;; ++expected) {
    const std::string m = "message " + std::to_string(expected);
    try {
      post_sign(ref, mum_sig(ref, as_bytes(m)).derivation);
    } catch (const CapacityExhausted&) {
      break;
    }
  }
  REQUIRE(expected > 200);

  std::uint64_t signed_count = 0;
  Run last;
  for (;; ++signed_count) {
    s.write("m", "message " + std::to_string(signed_count));
    last = s.run("sign " + kDesk + " --state s -m m -o sig");
    if (last.code != 0) break;
    REQUIRE(s.run("verify --pk p -m m -s sig --vstate v").code == 0);
    REQUIRE(signed_count < 1000);
  }
  CHECK(last.code == 3);
  CHECK(last.err.find("no more private keys to sign") != std::string::npos);
  CHECK(signed_count == expected);
}

TEST_CASE("corrupted state is a parse error") {
  Sandbox s;
  REQUIRE(s.run("keygen " + kDesk + " --seed 01 --state s --pk p").code == 0);
  auto st = Sandbox::slurp(s / "s");
  s.write("m", "x");
  s.write("s", st.substr(0, st.size() - 5));
  CHECK(s.run("sign " + kDesk + " --state s -m m -o sig").code == 2);
  s.write("s", "MSK1");
  CHECK(s.run("sign " + kDesk + " --state s -m m -o sig").code == 2);
  s.write("s", st);
  CHECK(s.run("sign --state s -m m -o sig").code == 2);  // standard preset disagrees with the stored geometry
  CHECK(s.run("sign " + kDesk + " --state s -m m -o sig").code == 0);
}

TEST_CASE("a held lock refuses a second signer") {
  Sandbox s;
  REQUIRE(s.run("keygen " + kDesk + " --seed 01 --state s --pk p").code == 0);
  s.write("m", "x");
  const auto lock_path = (s / "s").string() + ".lock";
  const int fd = ::open(lock_path.c_str(), O_RDWR | O_CREAT, 0600);
  REQUIRE(fd >= 0);
  REQUIRE(::flock(fd, LOCK_EX | LOCK_NB) == 0);
  const auto before = Sandbox::slurp(s / "s");
  const auto r = s.run("sign " + kDesk + " --state s -m m -o sig");
  ::flock(fd, LOCK_UN);
  ::close(fd);
  CHECK(r.code == 4);
  CHECK(r.err.find("locked") != std::string::npos);
  CHECK(Sandbox::slurp(s / "s") == before);
  CHECK(s.run("sign " + kDesk + " --state s -m m -o sig").code == 0);
}

TEST_CASE("a crash between the state write and the signature write never reuses keys") {
  Sandbox s;
  REQUIRE(s.run("keygen " + kDesk + " --seed 02 --state s --pk p").code == 0);
  s.write("m", "crash me");
  const auto before = Sandbox::slurp(s / "s");
  CHECK(s.run("sign " + kDesk + " --state s -m m -o sig", "MUMHORS_TEST_CRASH=after-state").code == 4);
  CHECK_FALSE(fs::exists(s / "sig"));
  const auto after = Sandbox::slurp(s / "s");
  CHECK(after != before);
  const auto st = decode_signer_state(as_bytes(after), SchemeParams::desk(), BitmapBackend::queue);
  CHECK(st.bitmap().activebits() == 64 - 4);
  REQUIRE(s.run("sign " + kDesk + " --state s -m m -o sig").code == 0);
  // The verifier never saw the lost signature, so the plain window is now behind.
  const auto v = s.run("verify --pk p -m m -s sig");
  CHECK(v.code == 1);
}

TEST_CASE("analysis subcommands") {
  Sandbox s;
  const auto solve = s.run("solve-rt");
  REQUIRE(solve.code == 0);
  CHECK(solve.out.find("minimal") != std::string::npos);
  CHECK(solve.out.find("rt=10.903") != std::string::npos);
  CHECK(solve.out.find("rt=13.94") != std::string::npos);

  const auto bound = s.run("bound");
  REQUIRE(bound.code == 0);
  CHECK(bound.out.find("total_log2=-124.99") != std::string::npos);

  const auto energy = s.run("energy --cycles 637376 --kb 0");
  REQUIRE(energy.code == 0);
  CHECK(energy.out.find("sign_mJ=2.594") != std::string::npos);
  CHECK(s.run("energy --cycles 1 --kb 1 --bits 8").code == 2);

  const auto sim = s.run("simulate " + kDesk + " --rt-list 1-3 --csv out.csv");
  REQUIRE(sim.code == 0);
  const auto csv = Sandbox::slurp(s / "out.csv");
  CHECK(csv.rfind("rt,messages_signed,bits_lost,utilization_pct\n1,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  CHECK(s.run("simulate " + kDesk + " --rt-list 2-x").code == 2);

  const auto bench = s.run("bench " + kDesk + " --n 20");
  CHECK(bench.code == 0);
  CHECK(bench.out.find("messages=20") != std::string::npos);
}

TEST_CASE("fuzz and channel subcommands") {
  Sandbox s;
  CHECK(s.run("fuzz-bitmap --seed 3 --ops 2000").code == 0);
  const auto mutant = s.run("fuzz-bitmap --seed 3 --ops 1000 --mutant");
  CHECK(mutant.code == 1);
  CHECK(mutant.out.find("divergence") != std::string::npos);

  CHECK(s.run("desync-sim " + kDesk + " --mode sca --schedule 5:flip-sig --n 40").code == 0);
  CHECK(s.run("desync-sim " + kDesk + " --mode plain --schedule 5:drop --n 40").code == 1);
  const auto reset = s.run("desync-sim " + kDesk + " --mode sca --schedule 5:drop,6:drop,7:drop --n 30 --reset");
  CHECK(reset.code == 0);
  CHECK(reset.out.find("roundtrip_accepted=1") != std::string::npos);
  CHECK(s.run("desync-sim " + kDesk + " --schedule 5:melt").code == 2);
  CHECK(s.run("desync-sim " + kDesk + " --schedule 5:drop,5:drop").code == 2);
}
