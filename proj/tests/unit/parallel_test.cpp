#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <thread>
#include <vector>

#include "commlink/parallel.hpp"

namespace commlink {
namespace {

class ThreadsEnv : public ::testing::Test {
 protected:
  void SetUp() override {
    if (const char* v = std::getenv("COMMLINK_THREADS")) saved_ = v;
  }
  void TearDown() override {
    if (saved_.empty()) {
      unsetenv("COMMLINK_THREADS");
    } else {
      setenv("COMMLINK_THREADS", saved_.c_str(), 1);
    }
  }
  std::string saved_;
};

TEST_F(ThreadsEnv, EnvironmentCapsWorkers) {
  const int cores = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  unsetenv("COMMLINK_THREADS");
  EXPECT_EQ(worker_count(), cores);
  setenv("COMMLINK_THREADS", "1", 1);
  EXPECT_EQ(worker_count(), 1);
  setenv("COMMLINK_THREADS", "100000", 1);
  EXPECT_EQ(worker_count(), cores);
  setenv("COMMLINK_THREADS", "0", 1);
  EXPECT_EQ(worker_count(), cores);
  setenv("COMMLINK_THREADS", "abc", 1);
  EXPECT_EQ(worker_count(), cores);
}

TEST(Parallel, VisitsEveryIndexOnce) {
  for (std::size_t workers : {1u, 2u, 5u}) {
    std::vector<std::atomic<int>> hits(97);
    parallel_for(hits.size(), workers, [&](std::size_t i) { ++hits[i]; });
    for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  }
}

TEST(Parallel, ZeroCountIsNoOp) {
  bool called = false;
  parallel_for(0, [&](std::size_t) { called = true; });
  EXPECT_FALSE(called);
}

TEST(Parallel, RethrowsAfterFinishing) {
  std::atomic<int> done{0};
  EXPECT_THROW(parallel_for(20, 3,
                            [&](std::size_t i) {
                              if (i == 4) throw std::runtime_error("task failed");
                              ++done;
                            }),
               std::runtime_error);
  EXPECT_EQ(done.load(), 19);
}

}  // namespace
}  // namespace commlink
