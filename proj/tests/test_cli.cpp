#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

namespace fs = std::filesystem;

namespace
{

struct Result
{
  int code{-1};
  std::string out;
};

class Cli : public ::testing::Test
{
protected:
  void SetUp() override
  {
    dir_ = fs::temp_directory_path() /
           ("ekfslam_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }

  void TearDown() override { fs::remove_all(dir_); }

  Result exec(const std::string& args) const
  {
    const auto capture = dir_ / "stdout.txt";
    const std::string cmd = std::string("\"") + EKFSLAM_CLI_PATH + "\" " + args + " > \"" + capture.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(capture);
    return r;
  }

  static std::string slurp(const fs::path& p)
  {
    std::ifstream in(p);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  std::string path(const std::string& rel) const { return (dir_ / rel).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, NoSubcommandIsUsageError)
{
  EXPECT_EQ(exec("").code, 1);
  EXPECT_EQ(exec("bogus").code, 1);
}

TEST_F(Cli, HelpListsSubcommands)
{
  const auto r = exec("--help");
  EXPECT_EQ(r.code, 0);
  for (const char* sub : {"simulate", "run", "compare"})
  {
    EXPECT_NE(r.out.find(sub), std::string::npos) << sub;
  }
}

TEST_F(Cli, SimulateWritesLogTruthAndMap)
{
  const auto r = exec("simulate --preset default --seed 4 --out " + path("sim"));
  ASSERT_EQ(r.code, 0) << r.out;
  for (const char* f : {"log.txt", "truth.txt", "map.txt"})
  {
    EXPECT_TRUE(fs::exists(dir_ / "sim" / f)) << f;
  }
  EXPECT_EQ(slurp(dir_ / "sim" / "log.txt").rfind("# slamlog v1", 0), 0u);
  EXPECT_NE(r.out.find("seed 4"), std::string::npos);
}

TEST_F(Cli, SimulateIsDeterministic)
{
  ASSERT_EQ(exec("simulate --preset default --seed 4 --out " + path("a")).code, 0);
  ASSERT_EQ(exec("simulate --preset default --seed 4 --out " + path("b")).code, 0);
  EXPECT_EQ(slurp(dir_ / "a" / "log.txt"), slurp(dir_ / "b" / "log.txt"));
}

TEST_F(Cli, RunAndCompare)
{
  ASSERT_EQ(exec("simulate --preset default --seed 2 --out " + path("sim")).code, 0);
  const std::string log = " --log " + path("sim/log.txt") + " --truth " + path("sim/truth.txt");
  const auto dr = exec("run" + log + " --estimator dead_reckoning --out " + path("dr"));
  ASSERT_EQ(dr.code, 0) << dr.out;
  const auto slam = exec("run" + log + " --estimator ekf_slam --out " + path("slam"));
  ASSERT_EQ(slam.code, 0) << slam.out;
  EXPECT_NE(slam.out.find("rmse"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_ / "slam" / "landmarks.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "slam" / "map.csv"));
  const auto loc = exec("run" + log + " --estimator ekf_localisation --map " + path("sim/map.txt") + " --out " +
                        path("loc"));
  ASSERT_EQ(loc.code, 0) << loc.out;

  const auto cmp = exec("compare " + path("dr/run.csv") + " " + path("loc/run.csv") + " " + path("slam/run.csv") +
                        " --labels dr,loc,slam --out " + path("cmp.csv"));
  ASSERT_EQ(cmp.code, 0) << cmp.out;
  const auto csv = slurp(dir_ / "cmp.csv");
  EXPECT_EQ(csv.rfind("label,rmse_x", 0), 0u);
  EXPECT_NE(csv.find("\ndr,"), std::string::npos);
  EXPECT_NE(csv.find("\nloc,"), std::string::npos);
  EXPECT_NE(csv.find("\nslam,"), std::string::npos);
}

TEST_F(Cli, LocalisationWithoutMapIsUsageError)
{
  ASSERT_EQ(exec("simulate --preset default --seed 1 --out " + path("sim")).code, 0);
  const auto r = exec("run --log " + path("sim/log.txt") + " --estimator ekf_localisation --out " + path("o"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("--map"), std::string::npos);
}

TEST_F(Cli, BadArgumentsAreUsageErrors)
{
  EXPECT_EQ(exec("run --log " + path("missing.txt") + " --estimator ekf_slam --out " + path("o")).code, 1);
  EXPECT_EQ(exec("run --preset default --estimator nonsense --runs 2 --out " + path("o")).code, 1);
  EXPECT_EQ(exec("simulate --preset nope --out " + path("o")).code, 1);
}

TEST_F(Cli, MalformedLogIsRuntimeError)
{
  std::ofstream(dir_ / "bad.txt") << "# slamlog v1 stationary_until=0\nS 0 abc\n";
  const auto r = exec("run --log " + path("bad.txt") + " --estimator dead_reckoning --out " + path("o"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("bad.txt:2"), std::string::npos);
}

TEST_F(Cli, MisalignedCompareIsRuntimeError)
{
  ASSERT_EQ(exec("simulate --preset default --seed 1 --out " + path("sim")).code, 0);
  ASSERT_EQ(exec("run --log " + path("sim/log.txt") + " --truth " + path("sim/truth.txt") +
                 " --estimator dead_reckoning --out " + path("dr"))
                .code,
            0);
  std::istringstream full(slurp(dir_ / "dr" / "run.csv"));
  std::ofstream shortened(dir_ / "short.csv");
  std::string line;
  for (int i = 0; i < 3 && std::getline(full, line); ++i)
  {
    shortened << line << '\n';
  }
  shortened.close();
  EXPECT_EQ(exec("compare " + path("dr/run.csv") + " " + path("short.csv")).code, 2);
}

TEST_F(Cli, BatchWritesTable)
{
  const auto r = exec("run --preset default --estimator ekf_slam --runs 2 --seed 5 --out " + path("batch"));
  ASSERT_EQ(r.code, 0) << r.out;
  const auto csv = slurp(dir_ / "batch" / "batch.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}
