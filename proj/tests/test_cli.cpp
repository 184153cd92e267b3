#include "doctest.h"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace {

namespace fs = std::filesystem;

std::string src(const std::string& rel) {
  return std::string(GANAX_SOURCE_DIR) + "/" + rel;
}

std::string tmp_path(const std::string& name) {
  return (fs::temp_directory_path() / name).string();
}

int invoke(const std::string& args, const std::string& stdout_file = "") {
  std::string cmd = std::string(GANAXSIM_BIN) + " " + args;
  cmd += stdout_file.empty() ? " > /dev/null 2>&1"
                             : " > " + stdout_file + " 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("cli run writes a report and exits zero") {
  const std::string rep = tmp_path("ganax_cli_rep.json");
  CHECK(invoke("run --workload " + src("workloads/example_4x4.json") +
               " --modes ganax,baseline --seed 7 --out " + rep) == 0);
  auto text = slurp(rep);
  CHECK(text.find("\"all_verified\": true") != std::string::npos);
  CHECK(text.find("\"speedup\"") != std::string::npos);
  std::remove(rep.c_str());
}

TEST_CASE("cli run csv format") {
  const std::string rep = tmp_path("ganax_cli_rep.csv");
  CHECK(invoke("run --workload " + src("workloads/example_4x4.json") +
               " --modes ganax --seed 7 --format csv --out " + rep) == 0);
  auto text = slurp(rep);
  CHECK(text.find("workload,layer_id,mode") != std::string::npos);
  CHECK(text.find("example_4x4,t0,ganax") != std::string::npos);
  std::remove(rep.c_str());
}

TEST_CASE("cli exits 2 on a bad workload path") {
  CHECK(invoke("run --workload /nonexistent/nope.json") == 2);
}

TEST_CASE("cli float mode runs and verifies") {
  CHECK(invoke("run --workload " + src("workloads/example_4x4.json") +
               " --modes ganax --elem float --seed 9") == 0);
}

TEST_CASE("cli explain prints the reorganized patterns") {
  const std::string out = tmp_path("ganax_cli_explain.txt");
  CHECK(invoke("explain --workload " + src("workloads/example_4x4.json"), out) == 0);
  auto text = slurp(out);
  CHECK(text.find("filter rows {2,4}") != std::string::npos);
  CHECK(text.find("filter rows {1,3,5}") != std::string::npos);
  CHECK(text.find("inconsequential fraction") != std::string::npos);
  std::remove(out.c_str());
}

TEST_CASE("cli asm/disasm round-trip through files") {
  const std::string guop = tmp_path("ganax_cli_prog.guop");
  const std::string bin = tmp_path("ganax_cli_prog.bin");
  const std::string back = tmp_path("ganax_cli_prog2.guop");
  {
    std::ofstream f(guop);
    f << "# sample program\n"
         ".slot * 3 mac\n"
         ".slot * 6 repeat\n"
         "access.cfg %pv*, %ag0, %step, 2\n"
         "access.cfg %pv0, %ag1, %end, 8\n"
         "access.start %pv*, %ag0\n"
         "mimd.ld %pv*, %repeat, 16\n"
         "repeat\n"
         "mac\n"
         "mimd.exe 3,3,3,3,3,3,3,3,6,6,6,6,6,6,6,6\n"
         "access.stop %pv*, %ag0\n";
  }
  CHECK(invoke("asm --in " + guop + " --out " + bin) == 0);
  CHECK(invoke("disasm --in " + bin + " --out " + back) == 0);
  // Assembling the disassembly reproduces the same image.
  const std::string bin2 = tmp_path("ganax_cli_prog2.bin");
  CHECK(invoke("asm --in " + back + " --out " + bin2) == 0);
  CHECK(slurp(bin) == slurp(bin2));
  // Corrupt image: decode error mentioning the offset, nonzero exit.
  // Word 0 sits after the 12-byte header and 256-byte local table.
  auto bytes = slurp(bin);
  bytes[12 + 256] = '\x07';
  {
    std::ofstream f(bin2, std::ios::binary);
    f << bytes;
  }
  const std::string err = tmp_path("ganax_cli_err.txt");
  CHECK(invoke("disasm --in " + bin2, err) != 0);
  CHECK(slurp(err).find("offset") != std::string::npos);
  for (const auto& p : {guop, bin, back, bin2, err}) std::remove(p.c_str());
}

TEST_CASE("cli trace emits per-pe lines and verifies") {
  const std::string out = tmp_path("ganax_cli_trace.txt");
  const std::string log = tmp_path("ganax_cli_trace_log.txt");
  CHECK(invoke("trace --workload " + src("workloads/example_4x4.json") +
                   " --mode ganax --seed 3 --trace-pe 0,0 --out " + out,
               log) == 0);
  auto text = slurp(out);
  CHECK(text.find("gen") != std::string::npos);
  CHECK(text.find("op mac") != std::string::npos);
  CHECK(slurp(log).find("verified yes") != std::string::npos);
  // Determinism: a second run produces the same trace bytes.
  const std::string out2 = tmp_path("ganax_cli_trace2.txt");
  CHECK(invoke("trace --workload " + src("workloads/example_4x4.json") +
                   " --mode ganax --seed 3 --trace-pe 0,0 --out " + out2,
               log) == 0);
  CHECK(text == slurp(out2));
  for (const auto& p : {out, out2, log}) std::remove(p.c_str());
}

TEST_CASE("cli run respects the config-dir environment variable") {
  // Points the default energy table at a nonsense path: still runs with
  // builtin defaults when the file is absent.
  const std::string rep = tmp_path("ganax_cli_env.json");
  std::string cmd = "GANAXSIM_CONFIG_DIR=" + std::string(GANAX_SOURCE_DIR) +
                    " " + GANAXSIM_BIN + " run --workload " +
                    src("workloads/example_4x4.json") + " --modes ganax --out " +
                    rep + " > /dev/null 2>&1";
  CHECK(WEXITSTATUS(std::system(cmd.c_str())) == 0);
  auto text = slurp(rep);
  // costs/default.json exists under the source dir, so its version string
  // lands in the report.
  CHECK(text.find("default-relative-1") != std::string::npos);
  std::remove(rep.c_str());
}
