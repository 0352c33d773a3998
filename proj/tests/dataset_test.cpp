#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "oracle/oracle.hpp"
#include "sven/dataset.hpp"
#include "test_support.hpp"

namespace {

using namespace sven;

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("sven_dataset_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& body) const {
    const auto path = (dir_ / name).string();
    std::ofstream(path) << body;
    return path;
  }

  std::filesystem::path dir_;
};

TEST(Dataset, PrecomputesMatchOracleStandardization) {
  const auto in = testing_support::random_instance(7, 40, 6);
  const DenseDataset ds(in.z, in.y);
  const auto pr = oracle::from_eigen(in.z, in.y);
  EXPECT_NEAR(ds.y_bar(), static_cast<double>(oracle::mean(pr.y)), 1e-12);
  for (Eigen::Index j = 0; j < ds.p(); ++j) {
    const auto x = oracle::standardize(pr.z[static_cast<std::size_t>(j)]);
    const Vector col = ds.standardized_column(j);
    for (Eigen::Index i = 0; i < ds.n(); ++i) EXPECT_NEAR(col[i], static_cast<double>(x[i]), 1e-12);
    EXPECT_NEAR(col.sum(), 0.0, 1e-10);
    EXPECT_NEAR(col.squaredNorm(), static_cast<double>(ds.n()), 1e-9);
    EXPECT_NEAR(ds.zeta()[j], col.dot(ds.y_tilde()), 1e-9);
  }
  EXPECT_NEAR(ds.yty(), ds.y_tilde().squaredNorm(), 1e-9);
}

TEST(Dataset, StandardizedDotEqualsExplicitProduct) {
  const auto in = testing_support::random_instance(9, 30, 5);
  const DenseDataset ds(in.z, in.y);
  std::mt19937_64 gen(3);
  std::normal_distribution<double> nrm;
  Vector a(30);
  for (auto& v : a) v = nrm(gen);
  for (Eigen::Index j = 0; j < 5; ++j) EXPECT_NEAR(ds.standardized_dot(j, a), ds.standardized_column(j).dot(a), 1e-10);
}

TEST(Dataset, SparseAndDenseAgree) {
  std::mt19937_64 gen(11);
  std::uniform_int_distribution<int> code(0, 2);
  DenseMatrix z(25, 8);
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    for (Eigen::Index j = 0; j < z.cols(); ++j) z(i, j) = code(gen) == 2 ? 1.0 + j : 0.0;
  z(0, 0) = 3.0;
  Vector y = Vector::LinSpaced(25, -1.0, 2.0);
  const DenseDataset dense(z, y);
  const SparseDataset sparse(z.sparseView(), y);
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    EXPECT_NEAR(dense.z_bar()[j], sparse.z_bar()[j], 1e-14);
    EXPECT_NEAR(dense.d_inv()[j], sparse.d_inv()[j], 1e-12);
    EXPECT_NEAR(dense.zeta()[j], sparse.zeta()[j], 1e-10);
    EXPECT_NEAR(dense.standardized_dot(j, y), sparse.standardized_dot(j, y), 1e-10);
  }
}

TEST(Dataset, RejectsConstantColumnsByName) {
  DenseMatrix z(4, 2);
  z << 1, 5, 2, 5, 3, 5, 4, 5;
  try {
    DenseDataset ds(z, Vector::LinSpaced(4, 0, 1), {"a", "flat"});
    FAIL() << "expected DegenerateColumnError";
  } catch (const DegenerateColumnError& e) {
    EXPECT_EQ(e.column(), "flat");
  }
}

TEST(Dataset, RejectsMismatchedShapesAndNonFinite) {
  DenseMatrix z = DenseMatrix::Random(5, 2);
  EXPECT_THROW(DenseDataset(z, Vector::Zero(4)), FormatError);
  Vector y = Vector::Zero(5);
  y[2] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(DenseDataset(z, y), FormatError);
}

TEST(Dataset, OutOfRangeColumnAccessThrows) {
  const auto in = testing_support::random_instance(1, 10, 3);
  const DenseDataset ds(in.z, in.y);
  EXPECT_THROW(ds.standardized_column(3), std::out_of_range);
  EXPECT_THROW(ds.standardized_column(-1), std::out_of_range);
}

TEST_F(TempDir, LoadsDenseCsvWithHeaderAndNamedResponse) {
  const auto path = write("d.csv", "a,resp,b\n1,2,3\n2,4,1\n3,7,2\n4,7,0\n");
  const auto ds = load_dense(path, parse_response_column("resp"));
  EXPECT_EQ(ds.n(), 4);
  EXPECT_EQ(ds.p(), 2);
  EXPECT_EQ(ds.names(), (std::vector<std::string>{"a", "b"}));
  EXPECT_DOUBLE_EQ(ds.y()[2], 7.0);
}

TEST_F(TempDir, LoadsHeaderlessTsvWithPositionalResponse) {
  const auto path = write("d.tsv", "1\t2\t3\n2\t4\t1\n3\t7\t2\n");
  const auto ds = load_dense(path, parse_response_column("3"));
  EXPECT_EQ(ds.p(), 2);
  EXPECT_EQ(ds.names(), (std::vector<std::string>{"1", "2"}));
  EXPECT_DOUBLE_EQ(ds.y()[0], 3.0);
}

TEST_F(TempDir, DenseErrorsNameRowAndColumn) {
  const auto ragged = write("r.csv", "a,b,y\n1,2,3\n1,2\n");
  EXPECT_THROW(load_dense(ragged, parse_response_column("y")), FormatError);
  const auto missing = write("m.csv", "a,b,y\n1,2,3\n1,NA,4\n2,3,1\n");
  try {
    load_dense(missing, parse_response_column("y"));
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("row 2, column 2"), std::string::npos) << e.what();
  }
  const auto good = write("g.csv", "a,b,y\n1,2,3\n1,4,4\n2,3,1\n");
  EXPECT_THROW(load_dense(good, parse_response_column("nope")), FormatError);
  EXPECT_THROW(load_dense(good, parse_response_column("9")), FormatError);
}

TEST_F(TempDir, SparseTripletRoundTrip) {
  const auto zf = write("z.txt", "% comment\n3 2 4\n1 1 1.5\n2 2 1\n3 1 -1\n3 2 2\n");
  const auto yf = write("y.txt", "1\n2\n4\n");
  const auto ds = load_sparse(zf, yf);
  EXPECT_EQ(ds.n(), 3);
  EXPECT_EQ(ds.p(), 2);
  EXPECT_DOUBLE_EQ(ds.z().coeff(0, 0), 1.5);
  EXPECT_DOUBLE_EQ(ds.z().coeff(1, 0), 0.0);
  EXPECT_EQ(ds.nonzeros(), 4);
}

TEST_F(TempDir, SparseErrors) {
  const auto yf = write("y.txt", "1\n2\n4\n");
  EXPECT_THROW(load_sparse(write("a.txt", "3 2 2\n1 1 1\n1 1 2\n"), yf), FormatError);     // duplicate
  EXPECT_THROW(load_sparse(write("b.txt", "3 2 1\n4 1 1\n"), yf), FormatError);            // out of range
  EXPECT_THROW(load_sparse(write("c.txt", "3 2 3\n1 1 1\n2 2 1\n"), yf), FormatError);     // count
  EXPECT_THROW(load_sparse(write("d.txt", "2 2 2\n1 1 1\n2 2 1\n"), yf), FormatError);     // y length
  EXPECT_THROW(load_sparse(write("e.txt", "1 1 1 1\n"), yf), FormatError);                 // header
}

TEST(ColumnFilter, DropsDuplicatesAndRareVariantsKeepingIds) {
  DenseMatrix z(6, 5);
  z.col(0) << 0, 1, 2, 1, 0, 2;
  z.col(1) << 0, 1, 2, 1, 0, 2;  // duplicate of column 0
  z.col(2) << 0, 0, 0, 0, 0, 1;  // haploid coding, MAF 1/6
  z.col(3) << 1, 1, 1, 1, 1, 1;  // constant
  z.col(4) << 0.3, 1.2, -2, 4, 5, 6;
  const Vector y = Vector::LinSpaced(6, 0, 1);
  const auto ds = make_filtered_dataset(z, y, {}, ColumnFilter{true, 0.2});
  EXPECT_EQ(ds.p(), 2);
  EXPECT_EQ(ds.column_ids(), (std::vector<int>{0, 4}));
  EXPECT_EQ(ds.names(), (std::vector<std::string>{"1", "5"}));
  const auto no_maf = make_filtered_dataset(z, y, {}, ColumnFilter{true, 0.0});
  EXPECT_EQ(no_maf.column_ids(), (std::vector<int>{0, 2, 4}));
}

TEST(ColumnFilter, SparseFilteringMatchesDense) {
  DenseMatrix z(5, 3);
  z << 1, 1, 0, 0, 0, 2, 2, 2, 0, 0, 0, 1, 1, 1, 0;
  const Vector y = Vector::LinSpaced(5, 0, 1);
  const auto d = make_filtered_dataset(z, y, {}, ColumnFilter{true, 0.0});
  const auto s = make_filtered_dataset(SparseMatrix(z.sparseView()), y, {}, ColumnFilter{true, 0.0});
  EXPECT_EQ(d.column_ids(), s.column_ids());
  EXPECT_EQ(d.column_ids(), (std::vector<int>{0, 2}));
}

}  // namespace
