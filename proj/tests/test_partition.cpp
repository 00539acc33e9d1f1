#include <doctest.h>

#include <cstdint>
#include <functional>
#include <vector>

#include "qtmtt/errors.hpp"
#include "qtmtt/partition.hpp"

using namespace qtmtt;

namespace {

// Plain recursion, no memoization, written independently of the library's
// enumerator: counts every visit the exploration makes.
void slow_count(const CuRect& cu, const PartitionConstraints& c, bool qt_only, uint64_t& cus,
                uint64_t& px) {
  cus += 1;
  px += uint64_t(cu.width) * uint64_t(cu.height);
  for (SplitMode m : legal_splits(cu, c).to_vector()) {
    if (m == SplitMode::NS) continue;
    if (qt_only && m != SplitMode::QT) continue;
    for (const CuRect& child : split_children(cu, m)) slow_count(child, c, qt_only, cus, px);
  }
}

CuCensus slow_enumerate(int ctu, PartitionConstraints c, bool qt_only) {
  c.ctu_size = ctu;
  uint64_t cus = 0, px = 0;
  slow_count(CuRect{0, 0, ctu, ctu, 0, 0, false}, c, qt_only, cus, px);
  return CuCensus{cus, px};
}

}  // namespace

TEST_CASE("legal splits at the canonical corner cases") {
  const PartitionConstraints c;

  const CuRect root{0, 0, 64, 64, 0, 0, false};
  CHECK(legal_splits(root, c) ==
        SplitModeSet{SplitMode::NS, SplitMode::QT, SplitMode::BTH, SplitMode::BTV});

  const CuRect tiny{0, 0, 4, 4, 4, 0, false};
  CHECK(legal_splits(tiny, c) == SplitModeSet{SplitMode::NS});

  // MTT budget exhausted but QT budget left
  const CuRect deep{0, 0, 32, 32, 1, 3, false};
  CHECK(legal_splits(deep, c) == SplitModeSet{SplitMode::NS, SplitMode::QT});

  // inside an MTT region quad splits are structurally forbidden
  const CuRect mtt{0, 0, 16, 16, 1, 1, true};
  CHECK_FALSE(legal_splits(mtt, c).contains(SplitMode::QT));

  // ternary needs the 1:2:1 quarters to stay legal and the side within reach
  const CuRect tt_ok{0, 0, 32, 32, 1, 0, false};
  CHECK(legal_splits(tt_ok, c).contains(SplitMode::TTH));
  CHECK(legal_splits(tt_ok, c).contains(SplitMode::TTV));
  const CuRect narrow{0, 0, 8, 32, 1, 1, true};
  CHECK(legal_splits(narrow, c).contains(SplitMode::TTH));   // h=32 >= 16
  CHECK_FALSE(legal_splits(narrow, c).contains(SplitMode::TTV));  // w=8 < 16
}

TEST_CASE("split children have the documented geometry and order") {
  const CuRect cu{0, 0, 32, 32, 1, 0, false};

  const auto qt = split_children(cu, SplitMode::QT);
  REQUIRE(qt.size() == 4);
  CHECK(qt[0] == CuRect{0, 0, 16, 16, 2, 0, false});
  CHECK(qt[1] == CuRect{16, 0, 16, 16, 2, 0, false});
  CHECK(qt[2] == CuRect{0, 16, 16, 16, 2, 0, false});
  CHECK(qt[3] == CuRect{16, 16, 16, 16, 2, 0, false});

  const auto tth = split_children(cu, SplitMode::TTH);
  REQUIRE(tth.size() == 3);
  CHECK(tth[0] == CuRect{0, 0, 32, 8, 1, 1, true});
  CHECK(tth[1] == CuRect{0, 8, 32, 16, 1, 1, true});
  CHECK(tth[2] == CuRect{0, 24, 32, 8, 1, 1, true});

  const CuRect rect{0, 0, 16, 32, 1, 1, true};
  const auto btv = split_children(rect, SplitMode::BTV);
  REQUIRE(btv.size() == 2);
  CHECK(btv[0] == CuRect{0, 0, 8, 32, 1, 2, true});
  CHECK(btv[1] == CuRect{8, 0, 8, 32, 1, 2, true});

  CHECK_THROWS_AS(split_children(cu, SplitMode::NS), ConfigError);
  // a 1:2:1 cut needs the side divisible by four
  CHECK_THROWS_AS(split_children(CuRect{0, 0, 6, 6, 0, 0, false}, SplitMode::TTH), ConfigError);
}

TEST_CASE("children tile the parent exactly for every legal mode") {
  const PartitionConstraints c;
  std::vector<CuRect> worklist{CuRect{0, 0, 64, 64, 0, 0, false}};
  int checked = 0;
  while (!worklist.empty() && checked < 5000) {
    const CuRect cu = worklist.back();
    worklist.pop_back();
    for (SplitMode m : legal_splits(cu, c).to_vector()) {
      if (m == SplitMode::NS) continue;
      const auto kids = split_children(cu, m);
      uint64_t area = 0;
      for (size_t i = 0; i < kids.size(); ++i) {
        const CuRect& k = kids[i];
        area += uint64_t(k.width) * k.height;
        CHECK(k.width >= c.min_cu_side);
        CHECK(k.height >= c.min_cu_side);
        CHECK(k.x >= cu.x);
        CHECK(k.y >= cu.y);
        CHECK(k.x + k.width <= cu.x + cu.width);
        CHECK(k.y + k.height <= cu.y + cu.height);
        for (size_t j = i + 1; j < kids.size(); ++j) {
          const CuRect& o = kids[j];
          const bool overlap = k.x < o.x + o.width && o.x < k.x + k.width &&
                               k.y < o.y + o.height && o.y < k.y + k.height;
          CHECK_FALSE(overlap);
        }
        ++checked;
      }
      CHECK(area == uint64_t(cu.width) * cu.height);
      if (kids[0].width >= 8) worklist.push_back(kids[0]);
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("exploration census matches the frozen reference counts") {
  PartitionConstraints c;

  SUBCASE("quad-only, minimum side 4") {
    const CuCensus got = enumerate_all_cus(64, c, true);
    CHECK(got.cu_count == 341);
    CHECK(got.pixel_count == 20480);
  }
  SUBCASE("quad-only, minimum side 8") {
    c.min_cu_side = 8;
    const CuCensus got = enumerate_all_cus(64, c, true);
    CHECK(got.cu_count == 85);
    CHECK(got.pixel_count == 16384);
  }
  SUBCASE("full rule set at defaults") {
    const CuCensus got = enumerate_all_cus(64, c);
    CHECK(got.cu_count == 8089);
    CHECK(got.pixel_count == 514048);
  }
  SUBCASE("32 ctu with two-level mtt") {
    c.max_mtt_depth = 2;
    const CuCensus got = enumerate_all_cus(32, c);
    CHECK(got.cu_count == 663);
    CHECK(got.pixel_count == 43008);
  }
  SUBCASE("deep mtt budgets used by trajectory collection") {
    c.max_mtt_depth = 4;
    CHECK(enumerate_all_cus(64, c).cu_count == 24017);
    CHECK(enumerate_all_cus(64, c).pixel_count == 1189888);
    c.max_mtt_depth = 6;
    CHECK(enumerate_all_cus(64, c).cu_count == 114577);
    CHECK(enumerate_all_cus(64, c).pixel_count == 4008960);
  }
}

TEST_CASE("memoized census equals plain recursion on small instances") {
  PartitionConstraints c;
  SUBCASE("defaults at 32") {
    const CuCensus fast = enumerate_all_cus(32, c);
    const CuCensus slow = slow_enumerate(32, c, false);
    CHECK(fast.cu_count == slow.cu_count);
    CHECK(fast.pixel_count == slow.pixel_count);
  }
  SUBCASE("shallow mtt at 64") {
    c.max_mtt_depth = 1;
    const CuCensus fast = enumerate_all_cus(64, c);
    const CuCensus slow = slow_enumerate(64, c, false);
    CHECK(fast.cu_count == slow.cu_count);
    CHECK(fast.pixel_count == slow.pixel_count);
  }
  SUBCASE("qt ladder closed form") {
    // four quad levels: 1 + 4 + 16 + 64 + 256 with every level covering the ctu
    const CuCensus got = enumerate_all_cus(64, c, true);
    CHECK(got.cu_count == 1 + 4 + 16 + 64 + 256);
    CHECK(got.pixel_count == 5ull * 64 * 64);
  }
}

TEST_CASE("larger mtt budgets only grow the reachable search space") {
  PartitionConstraints c;
  uint64_t prev = 0;
  for (int k = 0; k <= 3; ++k) {
    c.max_mtt_depth = k;
    const CuCensus got = enumerate_all_cus(64, c);
    CHECK(got.cu_count > prev);
    prev = got.cu_count;
  }
}

TEST_CASE("constraint validation rejects broken configurations") {
  PartitionConstraints c;
  CHECK_NOTHROW(c.validate());
  SUBCASE("non power of two ctu") {
    c.ctu_size = 48;
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }
  SUBCASE("min above ctu") {
    c.min_cu_side = 128;
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }
  SUBCASE("depth budget beyond series capacity") {
    c.max_qt_depth = 8;
    c.max_mtt_depth = 8;
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }
  SUBCASE("negative depth") {
    c.max_mtt_depth = -1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }
}

TEST_CASE("split mode names and child counts") {
  CHECK(std::string(name_of(SplitMode::NS)) == "NS");
  CHECK(std::string(name_of(SplitMode::TTV)) == "TTV");
  CHECK(child_count(SplitMode::QT) == 4);
  CHECK(child_count(SplitMode::BTH) == 2);
  CHECK(child_count(SplitMode::TTH) == 3);
  CHECK(index_of(SplitMode::NS) == 0);
  CHECK(index_of(SplitMode::TTV) == 5);
}

TEST_CASE("mode set operations") {
  SplitModeSet s{SplitMode::QT, SplitMode::TTV};
  CHECK(s.size() == 2);
  CHECK(s.contains(SplitMode::QT));
  CHECK_FALSE(s.contains(SplitMode::NS));
  s.insert(SplitMode::NS);
  CHECK(s.size() == 3);
  s.erase(SplitMode::QT);
  CHECK_FALSE(s.contains(SplitMode::QT));
  const SplitModeSet t{SplitMode::NS, SplitMode::BTH, SplitMode::TTV};
  CHECK(s.intersect(t) == SplitModeSet{SplitMode::NS, SplitMode::TTV});
  const auto v = t.to_vector();
  REQUIRE(v.size() == 3);
  CHECK(v[0] == SplitMode::NS);  // ascending index order
  CHECK(v[2] == SplitMode::TTV);
}
