#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "gen.hpp"
#include "ips/config.hpp"
#include "ips/error.hpp"
#include "ips/parallel.hpp"
#include "ips/run.hpp"
#include "ips/table.hpp"

using namespace ips;

namespace {

std::string random_word(Rng& r, std::size_t max_len) {
  static const std::string alphabet = "abcdefghijklmnopqrstuvwxyz0123456789_(),.=:/-";
  std::string s = "x";
  const auto n = r.below(max_len);
  for (std::uint64_t i = 0; i < n; ++i) s += alphabet[r.below(alphabet.size())];
  return s;
}

std::vector<double> random_list(Rng& r) {
  std::vector<double> v;
  const auto n = 1 + r.below(6);
  for (std::uint64_t i = 0; i < n; ++i) v.push_back((r.uniform() - 0.3) * std::pow(10.0, double(r.below(9)) - 4));
  return v;
}

ExperimentConfig random_config(Rng& r) {
  ExperimentConfig c;
  c.command = random_word(r, 8);
  c.model = random_word(r, 30);
  c.lattice.clear();
  for (std::uint64_t i = 0, n = 1 + r.below(3); i < n; ++i) c.lattice.push_back(int(2 * (2 + r.below(40))));
  c.init = random_word(r, 10);
  c.times = random_list(r);
  c.reps = r.below(1'000'000);
  c.seed = r.next_u64() >> 1;
  c.out = r.below(2) ? "" : random_word(r, 20);
  c.probe = r.below(2) ? "" : random_word(r, 6);
  c.target = random_word(r, 12);
  c.u_grid = random_list(r);
  c.tmax = r.uniform() * 1e4;
  c.densities = random_list(r);
  c.n = int(r.below(1000));
  c.width = int(r.below(4096));
  c.dim = int(1 + r.below(3));
  c.mode = random_word(r, 6);
  c.ks = random_list(r);
  c.snap_prefix = r.below(2) ? "" : random_word(r, 12);
  return c;
}

std::string message_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ConfigError);
    return e.what();
  }
  return "";
}

ExperimentConfig small(const std::string& command) {
  ExperimentConfig c;
  c.command = command;
  c.reps = 200;
  c.seed = 7;
  return c;
}

std::string metadata_without_wall_time(const ResultTable& t) {
  std::string s;
  for (const auto& [k, v] : t.metadata())
    if (k != "wall_time_s") s += k + "=" + v + "\n";
  return s;
}

}  // namespace

TEST_CASE("config round trip through serialize and parse") {
  for (std::uint64_t i = 0; i < 300; ++i) {
    auto r = gen::rng(900, i);
    const auto c = random_config(r);
    const auto text = serialize(c);
    const auto back = parse_config(text);
    CHECK(back == c);
    CHECK(serialize(back) == text);
  }
}

TEST_CASE("config grammar") {
  const auto c = parse_config("# comment\n\n  model = lv(alpha=0.9, kernel=nn(2))  \ntimes=0:1:0.25\r\nlattice=8x6x4\n");
  CHECK(c.model == "lv(alpha=0.9, kernel=nn(2))");
  CHECK(c.times == std::vector<double>{0, 0.25, 0.5, 0.75, 1});
  CHECK(c.lattice == std::vector<int>{8, 6, 4});
  CHECK(c.reps == ExperimentConfig{}.reps);
  CHECK(parse_grid("0.5, 1,2") == std::vector<double>{0.5, 1, 2});
  CHECK(parse_grid("").empty());
  CHECK_THROWS(parse_grid("1:0:1"));
  CHECK_THROWS(parse_grid("0:1"));
}

TEST_CASE("unknown and malformed keys name the key, line and column") {
  const auto msg = message_of("model=voter\n\n   colour = blue\n");
  CHECK(msg.find("'colour'") != std::string::npos);
  CHECK(msg.find("line 3") != std::string::npos);
  CHECK(msg.find("column 4") != std::string::npos);

  const auto dup = message_of("reps=1\nreps=2\n");
  CHECK(dup.find("duplicate") != std::string::npos);
  CHECK(dup.find("line 2") != std::string::npos);

  const auto bad = message_of("reps=1\nseed = abc\n");
  CHECK(bad.find("'seed'") != std::string::npos);
  CHECK(bad.find("line 2, column 8") != std::string::npos);

  CHECK(message_of("Model=voter\n").find("malformed") != std::string::npos);
  CHECK(message_of("justtext\n").find("expected key=value") != std::string::npos);
  CHECK(message_of("# only a comment\n").empty());
}

TEST_CASE("csv quoting round trip") {
  for (std::uint64_t i = 0; i < 200; ++i) {
    auto r = gen::rng(901, i);
    std::vector<std::string> cells;
    for (std::uint64_t k = 0, n = 1 + r.below(6); k < n; ++k) {
      std::string s;
      for (std::uint64_t j = 0, m = r.below(8); j < m; ++j) s += "ab,\" x"[r.below(6)];
      cells.push_back(s);
    }
    std::string line;
    for (std::size_t k = 0; k < cells.size(); ++k) line += (k ? "," : "") + csv_quote(cells[k]);
    CHECK(csv_split(line) == cells);
  }
  CHECK(csv_quote("plain") == "plain");
  CHECK(csv_quote("a,b") == "\"a,b\"");
  CHECK(csv_quote("say \"hi\"") == "\"say \"\"hi\"\"\"");
}

TEST_CASE("result table schema") {
  ResultTable t;
  t.add_column("t", "time");
  t.add_stat("x", "fraction");
  CHECK(t.columns() == std::vector<std::string>{"t", "x", "x_stderr"});
  t.add(Cells() << 1.5 << Estimate{0.25, 0.01});
  CHECK_THROWS_AS(t.add(Cells() << 1.0), Error);
  t.set_meta("config", "a=1\nb=2\n");
  std::ostringstream o;
  t.write(o);
  CHECK(o.str() == "# config: a=1\n# config: b=2\n# units: time,fraction,fraction\nt,x,x_stderr\n1.5,0.25,0.01\n");
}

TEST_CASE("parse_target") {
  auto lat = make_torus({8, 8});
  CHECK(parse_target("empty", *lat).empty());
  CHECK(parse_target("single", *lat).size() == 1);
  CHECK(parse_target("pair", *lat).size() == 2);
  CHECK(parse_target("triple", *lat).size() == 3);
  const auto s = parse_target("(0,0);(1,0);(-1,2)", *lat);
  CHECK(s.size() == 3);
  CHECK(s.contains(std::uint32_t(lat->index(Offset{7, 2}))));
  CHECK_THROWS(parse_target("(0,0);(8,0)", *lat));
  CHECK_THROWS(parse_target("(0,0,0)", *lat));
}

TEST_CASE("minimal voter config gives a density trajectory") {
  ExperimentConfig c = small("evolve");
  const auto t = run(c);
  CHECK(t.columns() == std::vector<std::string>{"t", "density", "density_stderr", "reps"});
  REQUIRE(t.rows().size() == c.times.size());
  for (std::size_t i = 0; i < c.times.size(); ++i) {
    CHECK(std::stod(t.rows()[i][0]) == c.times[i]);
    const double d = std::stod(t.rows()[i][1]), se = std::stod(t.rows()[i][2]);
    CHECK(d >= 0);
    CHECK(d <= 1);
    // the voter model is a martingale for the density
    CHECK(std::fabs(d - 0.5) < 4 * se + 0.02);
  }
  CHECK(t.meta("config_hash") == fnv1a_hex(serialize(c)));
  CHECK(t.meta("seed") == "7");
}

TEST_CASE("same config twice gives identical rows, across worker counts") {
  const unsigned before = default_threads();
  for (const auto* cmd : {"evolve", "dual", "perc"}) {
    auto c = small(cmd);
    if (c.command == "perc") {
      c.width = 32;
      c.n = 40;
      c.densities = {0.6, 0.7};
    }
    if (c.command == "dual") c.model = "lv(alpha=0.9, kernel=nn(2))";
    set_default_threads(1);
    const auto a = run(c);
    const auto b = run(c);
    set_default_threads(4);
    const auto d = run(c);
    set_default_threads(before);
    CHECK(a.data_csv() == b.data_csv());
    CHECK(a.data_csv() == d.data_csv());
    CHECK(metadata_without_wall_time(a) == metadata_without_wall_time(d));
  }
}

TEST_CASE("every statistical column is followed by its stderr column") {
  std::vector<ExperimentConfig> cs;
  cs.push_back(small("evolve"));
  auto d = small("dual");
  d.model = "gv(theta=0.9)";
  cs.push_back(d);
  auto k = small("cancellative");
  k.model = "av(alpha=0.8)";
  cs.push_back(k);
  auto r = small("reaction");
  r.model = "lv(alpha=0.5, kernel=nn(3))";
  r.lattice = {8, 8, 8};
  r.tmax = 5;
  r.reps = 50;
  r.u_grid = {0.25, 0.5};
  cs.push_back(r);
  auto f = r;
  f.model = "av(alpha=0.5, nbhd={(1,0,0),(-1,0,0)}, kernel=nn(3))";
  f.probe = "fprime";
  cs.push_back(f);
  auto p = small("perc");
  p.width = 16;
  p.n = 10;
  cs.push_back(p);
  for (const auto* suite : {"duality", "nuhalf", "oddgoal", "flip2", "cct", "exact"}) {
    auto v = small("verify");
    v.probe = suite;
    v.times = {0.5, 1};
    v.ks = {0, 1, 2};
    if (v.probe == "exact") {
      v.lattice = {3, 3};
      v.reps = 3;
    }
    if (v.probe == "cct") v.init = "zeros;single";
    cs.push_back(v);
  }
  for (const auto& c : cs) {
    CAPTURE(c.command);
    CAPTURE(c.probe);
    const auto t = run(c);
    CHECK(!t.rows().empty());
    const auto& kinds = t.kinds();
    for (std::size_t i = 0; i < kinds.size(); ++i) {
      if (kinds[i] == ResultTable::Kind::Stat) {
        REQUIRE(i + 1 < kinds.size());
        CHECK(kinds[i + 1] == ResultTable::Kind::Stderr);
      }
      if (kinds[i] == ResultTable::Kind::Stderr) CHECK((i > 0 && kinds[i - 1] == ResultTable::Kind::Stat));
    }
    if (c.command == "verify") CHECK((t.meta("pass") == "true" || t.meta("pass") == "false"));
  }
}

TEST_CASE("rerunning from the embedded config reproduces the table") {
  auto c = small("dual");
  c.model = "lv(alpha=0.8, kernel=nn(2))";
  c.target = "(0,0);(1,1)";
  const auto t = run(c);
  const std::string path = "test_run_embedded.csv";
  t.write_file(path);
  const auto back = config_from_csv(path);
  CHECK(back == c);
  CHECK(run(back).data_csv() == t.data_csv());

  // a tampered config no longer matches its hash
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  in.close();
  std::string text = ss.str();
  const auto pos = text.find("# config: reps=200");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 18, "# config: reps=201");
  std::ofstream(path) << text;
  CHECK_THROWS_AS(config_from_csv(path), Error);
  std::remove(path.c_str());
}

TEST_CASE("run rejects bad configs") {
  auto c = small("bogus");
  CHECK_THROWS_AS(run(c), Error);
  c = small("verify");
  c.probe = "nothing";
  CHECK_THROWS_AS(run(c), Error);
  c = small("perc");
  c.mode = "diagonal";
  CHECK_THROWS_AS(run(c), Error);
}
