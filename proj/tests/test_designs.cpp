#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "dtlearn/designs.hpp"
#include "dtlearn/gf2m.hpp"

using namespace dtl;

namespace {

// Plain rank over GF(2) of a set of short bit vectors.
int rank_gf2(std::vector<uint64_t> v) {
  int r = 0;
  for (int bit = 63; bit >= 0; --bit) {
    auto it = std::find_if(v.begin() + r, v.end(),
                           [&](uint64_t x) { return (x >> bit) & 1; });
    if (it == v.end()) continue;
    std::swap(*it, v[r]);
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (k != static_cast<std::size_t>(r) && ((v[k] >> bit) & 1)) v[k] ^= v[r];
    }
    ++r;
  }
  return r;
}

uint64_t column_word(const GeneratorMatrix& M, int i) {
  uint64_t c = 0;
  for (int r = 0; r < M.m; ++r) c |= uint64_t{M.rows[r].get(i)} << r;
  return c;
}

// Naive UDS check straight from the definition.
bool naive_uds(const TernaryDesign& s, int d) {
  bool ok = true;
  for_each_subset(s.n, d, [&](const std::vector<int>& T) {
    for (int j = 0; j < d; ++j) {
      for (uint64_t xi = 0; xi < (uint64_t{1} << d); ++xi) {
        if ((xi >> j) & 1) continue;
        bool found = false;
        for (const auto& row : s.rows) {
          bool match = true;
          for (int k = 0; k < d && match; ++k) {
            Symbol want = k == j ? Symbol::FREE
                                 : ((xi >> k) & 1 ? Symbol::ONE : Symbol::ZERO);
            match = row.at(T[k]) == want;
          }
          if (match) {
            found = true;
            break;
          }
        }
        if (!found) {
          ok = false;
          return false;
        }
      }
    }
    return true;
  });
  return ok;
}

double naive_bias(const BinaryDesign& s, const Assignment& alpha) {
  double acc = 0.0;
  for (std::size_t r = 0; r < s.size(); ++r) {
    int par = (s.rows[r] & alpha).weight() & 1;
    acc += (par ? -1.0 : 1.0) * static_cast<double>(s.weight(r));
  }
  return std::abs(acc) / static_cast<double>(s.total_weight());
}

}  // namespace

TEST(GF2m, SmallestIrreducibles) {
  EXPECT_EQ(smallest_irreducible(1), 0b11u);
  EXPECT_EQ(smallest_irreducible(2), 0b111u);
  EXPECT_EQ(smallest_irreducible(3), 0b1011u);
  EXPECT_EQ(smallest_irreducible(4), 0b10011u);
  EXPECT_EQ(smallest_irreducible(8), 0x11bu);
  EXPECT_FALSE(is_irreducible(0b101));  // (x+1)^2
}

TEST(GF2m, MultiplicativeGroupOrder) {
  for (int w = 1; w <= 10; ++w) {
    GF2m f(w);
    for (uint64_t a = 1; a < f.order(); ++a) {
      ASSERT_EQ(f.pow(a, f.order() - 1), 1u) << "w=" << w << " a=" << a;
    }
  }
}

TEST(Binomial, Values) {
  EXPECT_EQ(binomial(5, 2), 10u);
  EXPECT_EQ(binomial(200, 0), 1u);
  EXPECT_EQ(binomial(3, 4), 0u);
  EXPECT_EQ(binomial(64, 32), 1832624140942590534ULL);
  int count = 0;
  for_each_subset(6, 3, [&](const std::vector<int>&) { return ++count, true; });
  EXPECT_EQ(count, 20);
}

TEST(KwiseMatrix, PairwiseFreeCase) {
  auto M = kwise_matrix(4, 1);
  EXPECT_EQ(M.m, 1);
  EXPECT_EQ(M.rows[0].to_string(), "1111");
  EXPECT_THROW(kwise_matrix(3, 4), ParameterError);
}

TEST(KwiseMatrix, ColumnsIndependent) {
  auto M = kwise_matrix(8, 3);
  EXPECT_EQ(M.m, 4);
  for (int n = 2; n <= 16; ++n) {
    for (int d = 1; d <= std::min(n, 5); ++d) {
      auto K = kwise_matrix(n, d);
      for_each_subset(n, d, [&](const std::vector<int>& c) {
        std::vector<uint64_t> cols;
        for (int i : c) cols.push_back(column_word(K, i));
        EXPECT_EQ(rank_gf2(cols), d) << "n=" << n << " d=" << d;
        return true;
      });
    }
  }
}

TEST(KwiseSpace, ExactPatternCounts) {
  auto s = kwise_space(4, 2);
  auto rep = verify_kwise(s, 2);
  EXPECT_TRUE(rep.pass) << rep.detail;
  EXPECT_EQ(rep.checked, 6u * 4u);
  auto s3 = kwise_space(3, 3);
  std::set<std::string> pats;
  for (const auto& r : s3.rows) pats.insert(r.to_string());
  EXPECT_EQ(pats.size(), 8u);
  auto s1 = kwise_space(5, 1);
  for (int i = 1; i <= 5; ++i) {
    int ones = 0;
    for (const auto& r : s1.rows) ones += r.get(i);
    EXPECT_GT(ones, 0);
    EXPECT_LT(ones, static_cast<int>(s1.size()));
  }
}

TEST(KwiseSpace, AllSmallCasesAndSize) {
  for (int n = 1; n <= 8; ++n) {
    for (int d = 1; d <= std::min(n, 4); ++d) {
      auto s = kwise_space(n, d);
      auto M = kwise_matrix(n, d);
      EXPECT_LE(s.size(), std::size_t{1} << M.m);
      EXPECT_TRUE(verify_kwise(s, d).pass) << n << "," << d;
      std::set<Assignment> distinct(s.rows.begin(), s.rows.end());
      EXPECT_EQ(distinct.size(), s.size());
    }
  }
}

TEST(BiasedSet, BoundHoldsExhaustively) {
  for (int m = 1; m <= 12; ++m) {
    for (double lambda : {0.5, 0.25, 0.125}) {
      auto s = biased_set(m, lambda);
      ASSERT_TRUE(s.bias.has_value());
      EXPECT_LE(s.bias->lambda, lambda);
      for (uint64_t a = 1; a < (uint64_t{1} << m); ++a) {
        ASSERT_LE(naive_bias(s, Assignment::from_word(m, a)), lambda + 1e-12)
            << "m=" << m << " lambda=" << lambda << " a=" << a;
      }
    }
  }
}

TEST(BiasedSet, EightBitsQuarter) {
  auto s = biased_set(8, 0.25);
  EXPECT_LE(max_bias(s, 8), 0.25);
  EXPECT_TRUE(verify_bias(s, 8, 0.25).pass);
  EXPECT_THROW(biased_set(8, 1.0), ParameterError);
  EXPECT_THROW(biased_set(8, 0.0), ParameterError);
  EXPECT_THROW(biased_set(40, 1e-9, 1 << 20), CapacityError);
}

TEST(BiasedSet, FullCubeHasZeroBias) {
  BinaryDesign cube;
  cube.n = 6;
  for (uint64_t k = 0; k < 64; ++k) cube.rows.push_back(Assignment::from_word(6, k));
  EXPECT_EQ(max_bias(cube, 6), 0.0);
}

TEST(ComposeBiased, WeightBoundedTests) {
  auto M = kwise_matrix(8, 2);
  auto sh = biased_set(M.m, 1.0 / 8);
  auto s = compose_biased(M, sh);
  EXPECT_EQ(s.total_weight(), sh.total_weight());
  ASSERT_TRUE(s.bias.has_value());
  for (uint64_t a = 1; a < 256; ++a) {
    if (std::popcount(a) > 2) continue;
    ASSERT_LE(naive_bias(s, Assignment::from_word(8, a)), 1.0 / 8 + 1e-12);
  }
  EXPECT_THROW(compose_biased(M, biased_set(M.m + 1, 0.5)), DimensionError);
}

TEST(ComposeBiased, FullCubeInputGivesKwiseSpace) {
  auto M = kwise_matrix(8, 3);
  BinaryDesign cube;
  cube.n = M.m;
  for (uint64_t k = 0; k < (uint64_t{1} << M.m); ++k) {
    cube.rows.push_back(Assignment::from_word(M.m, k));
  }
  cube.bias = BiasCertificate{0.0, M.m};
  auto s = compose_biased(M, cube);
  EXPECT_EQ(max_bias(s, 3), 0.0);
  auto space = kwise_space(8, 3);
  EXPECT_EQ(s.rows, space.rows);
}

TEST(UniversalSet, BothBackends) {
  auto k = universal_set(8, 2, UniversalBackend::Kwise);
  EXPECT_TRUE(verify_universal(k, 2).pass);
  auto g = universal_set(6, 3, UniversalBackend::Greedy);
  auto rep = verify_universal(g, 3);
  EXPECT_TRUE(rep.pass);
  EXPECT_EQ(rep.checked, 20u * 8u);
  auto full = universal_set(4, 4, UniversalBackend::Greedy);
  EXPECT_EQ(full.size(), 16u);
  EXPECT_THROW(universal_set(3, 4), ParameterError);
}

TEST(UniversalSet, GreedyCoversLargerCases) {
  for (auto [t, d] : {std::pair{16, 4}, {20, 3}, {32, 2}, {12, 6}}) {
    auto g = universal_set(t, d, UniversalBackend::Greedy);
    EXPECT_TRUE(verify_universal(g, d).pass) << t << "," << d;
    auto again = universal_set(t, d, UniversalBackend::Greedy);
    EXPECT_EQ(g.rows, again.rows);
  }
}

TEST(PerfectHash, Examples) {
  Rng rng(1);
  auto id = perfect_hash_family(16, 16, 3, rng);
  EXPECT_EQ(id.size(), 1u);
  auto one = perfect_hash_family(50, 4, 1, rng);
  EXPECT_EQ(one.size(), 1u);
  auto h = perfect_hash_family(20, 32, 3, rng);
  EXPECT_TRUE(verify_phf(h, 3).pass);
  // Independent check.
  for_each_subset(20, 3, [&](const std::vector<int>& T) {
    bool split = false;
    for (const auto& f : h.funcs) {
      std::set<int> img{f[T[0] - 1], f[T[1] - 1], f[T[2] - 1]};
      split = split || img.size() == 3;
    }
    EXPECT_TRUE(split);
    return true;
  });
  for (const auto& f : h.funcs) {
    for (int v : f) {
      ASSERT_GE(v, 1);
      ASSERT_LE(v, 32);
    }
  }
  EXPECT_THROW(perfect_hash_family(20, 8, 3, rng), ParameterError);
}

TEST(UniversalDisjointSet, SingleCoordinate) {
  auto s = universal_disjoint_set(1, 1);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s.rows[0].to_string(), "z");
}

TEST(UniversalDisjointSet, SmallCasesMatchNaiveCheck) {
  for (int n = 1; n <= 10; ++n) {
    for (int d = 1; d <= std::min(n, 3); ++d) {
      auto s = universal_disjoint_set(n, d);
      ASSERT_TRUE(naive_uds(s, d)) << n << "," << d;
      ASSERT_TRUE(verify_uds(s, d).pass) << n << "," << d;
    }
  }
}

TEST(UniversalDisjointSet, AllBackendsUpToSixteen) {
  for (auto backend : {UdsBackend::Composed, UdsBackend::Random}) {
    for (int n = 1; n <= 16; ++n) {
      for (int d = 1; d <= std::min(n, 3); ++d) {
        UdsOptions opts;
        opts.backend = backend;
        auto s = universal_disjoint_set(n, d, opts);
        auto rep = verify_uds(s, d);
        ASSERT_TRUE(rep.pass) << n << "," << d;
        ASSERT_EQ(rep.checked, binomial(n, d) * (uint64_t{1} << d) * d);
      }
    }
  }
}

TEST(UniversalDisjointSet, ComposedSizeIsProduct) {
  UdsInfo info;
  UdsOptions opts;
  opts.backend = UdsBackend::Composed;
  auto s = universal_disjoint_set(10, 3, opts, &info);
  EXPECT_EQ(s.size(), info.w_size * info.h_size);
  EXPECT_EQ(info.w_size, info.u_size * info.q);
  // Past q the perfect hash family is exercised.
  auto big = universal_disjoint_set(40, 2, opts, &info);
  EXPECT_EQ(info.q, 32);
  EXPECT_GT(info.h_size, 1u);
  EXPECT_EQ(big.size(), info.w_size * info.h_size);
  EXPECT_TRUE(verify_uds(big, 2).pass);
}

TEST(UniversalDisjointSet, CorruptedRowReported) {
  auto s = universal_disjoint_set(6, 2);
  ASSERT_TRUE(verify_uds(s, 2).pass);
  // Remove every row realizing (x_1 = z, x_2 = 1).
  TernaryDesign bad{s.n, {}};
  for (const auto& r : s.rows) {
    if (!(r.at(1) == Symbol::FREE && r.at(2) == Symbol::ONE)) bad.rows.push_back(r);
  }
  auto rep = verify_uds(bad, 2);
  EXPECT_FALSE(rep.pass);
  EXPECT_EQ(rep.tuple, (std::vector<int>{1, 2}));
  EXPECT_EQ(rep.j, 1);
  EXPECT_EQ(rep.xi, (std::vector<int>{0, 1}));
  auto text = report_to_text(rep, DesignKind::Uds);
  EXPECT_NE(text.find("tuple=1,2 xi=0,1 j=1"), std::string::npos);
}

TEST(SparseAllOne, WorkedCase) {
  auto s = sparse_all_one_set(7, 2);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s.rows[0].to_string(), "0110110");
  EXPECT_EQ(s.rows[1].to_string(), "1011011");
  EXPECT_EQ(s.rows[2].to_string(), "1101101");
  for (const auto& r : s.rows) EXPECT_LE(r.weight(), 7 * 0.75);
  for_each_subset(7, 2, [&](const std::vector<int>& T) {
    bool covered = false;
    for (const auto& r : s.rows) covered = covered || (r.get(T[0]) && r.get(T[1]));
    EXPECT_TRUE(covered);
    return true;
  });
}

TEST(SparseAllOne, EdgeCases) {
  auto s = sparse_all_one_set(3, 1);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s.rows[0].to_string(), "010");
  EXPECT_EQ(s.rows[1].to_string(), "101");
  auto z = sparse_all_one_set(5, 0);
  ASSERT_EQ(z.size(), 1u);
  EXPECT_FALSE(z.rows[0].any());
  EXPECT_THROW(sparse_all_one_set(2, 2), ParameterError);
}

TEST(SparseAllOne, CoverageMatchesHittingSetSearch) {
  // The hitting-set verifier against subset enumeration on small cases.
  for (int n = 2; n <= 12; ++n) {
    for (int d = 1; d < n && d <= 4; ++d) {
      auto s = sparse_all_one_set(n, d);
      auto rep = verify_saos(s, d);
      EXPECT_EQ(rep.detail.find("coverage FAIL"), std::string::npos);
      // Dropping a row breaks coverage.
      BinaryDesign cut = s;
      cut.rows.pop_back();
      bool naive = true;
      for_each_subset(n, d, [&](const std::vector<int>& T) {
        bool c = false;
        for (const auto& r : cut.rows) {
          bool all = true;
          for (int i : T) all = all && r.get(i);
          c = c || all;
        }
        naive = naive && c;
        return naive;
      });
      auto cut_rep = verify_saos(cut, d);
      EXPECT_EQ(cut_rep.detail.find("coverage FAIL") == std::string::npos, naive)
          << n << "," << d;
    }
  }
}

TEST(ZeroTestSet, SizesAndOrder) {
  auto z0 = zero_test_set(5, 0);
  ASSERT_EQ(z0.size(), 1u);
  EXPECT_FALSE(z0.rows[0].any());
  auto z = zero_test_set(4, 2);
  EXPECT_EQ(z.size(), 11u);
  EXPECT_EQ(z.rows[1].to_string(), "1000");
  EXPECT_EQ(z.rows[5].to_string(), "1100");
  EXPECT_TRUE(verify_zero_test(z, 2).pass);
  EXPECT_THROW(zero_test_set(40, 20, 1000), CapacityError);
  EXPECT_THROW(zero_test_set(3, 4), ParameterError);
}

TEST(VerifyDesign, DispatchAndText) {
  AnyDesign d = sparse_all_one_set(7, 2);
  auto rep = verify_design(d, DesignKind::Saos, VerifyParams{2, 1.0, 1ULL << 30});
  EXPECT_TRUE(rep.pass) << rep.detail;
  AnyDesign k = kwise_space(6, 2);
  EXPECT_TRUE(verify_design(k, DesignKind::Kwise, VerifyParams{2}).pass);
  EXPECT_THROW(verify_design(k, DesignKind::Uds, VerifyParams{2}), ValidationError);
  EXPECT_EQ(parse_design_kind("zerotest"), DesignKind::ZeroTest);
  EXPECT_THROW(parse_design_kind("nope"), ValidationError);
  std::ostringstream out;
  write_design(out, AnyDesign{universal_disjoint_set(1, 1)});
  EXPECT_EQ(out.str(), "z\n");
  EXPECT_THROW(verify_uds(universal_disjoint_set(16, 3), 3, 10), CapacityError);
}

TEST(Designs, Deterministic) {
  auto a = universal_disjoint_set(14, 3);
  auto b = universal_disjoint_set(14, 3);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) ASSERT_EQ(a.rows[k], b.rows[k]);
  EXPECT_EQ(biased_set(10, 0.1).rows, biased_set(10, 0.1).rows);
}
