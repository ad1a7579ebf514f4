#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "fpscan/pipeline/ingest.hpp"

namespace fpscan::pipeline {
namespace {

std::vector<std::string> read_all(const std::string& text, InputFormat format) {
  std::istringstream in(text);
  NameReader reader(in, format);
  std::vector<std::string> out;
  while (auto n = reader.next()) out.push_back(*n);
  return out;
}

TEST(Ingest, LineEndings) {
  EXPECT_EQ(read_all("a.com\nb.com\r\nc.com\rd.com", InputFormat::kNames),
            (std::vector<std::string>{"a.com", "b.com", "c.com", "d.com"}));
}

TEST(Ingest, BlankAndCommentLines) {
  EXPECT_EQ(read_all("\n# header\n  a.com  \n\t\n#b.com\n", InputFormat::kNames),
            std::vector<std::string>{"a.com"});
  EXPECT_TRUE(read_all("", InputFormat::kAuto).empty());
}

TEST(Ingest, RankedLists) {
  EXPECT_EQ(read_all("1,google.com\n2,example.org\r\n", InputFormat::kRanked),
            (std::vector<std::string>{"google.com", "example.org"}));
  EXPECT_THROW(read_all("google.com\n", InputFormat::kRanked), IngestError);
}

TEST(Ingest, AutoDetect) {
  EXPECT_EQ(read_all("1,a.com\nb.com\n", InputFormat::kAuto),
            (std::vector<std::string>{"a.com", "b.com"}));
  EXPECT_EQ(read_all("a,b.com\n", InputFormat::kAuto), std::vector<std::string>{"a,b.com"});
}

TEST(Ingest, StripRank) {
  EXPECT_EQ(strip_rank("17,example.com"), "example.com");
  EXPECT_EQ(strip_rank("example.com"), "example.com");
}

TEST(Ingest, FormatNames) {
  EXPECT_EQ(input_format_from_string("names"), InputFormat::kNames);
  EXPECT_EQ(input_format_from_string("ranked"), InputFormat::kRanked);
  EXPECT_EQ(input_format_from_string("auto"), InputFormat::kAuto);
  EXPECT_FALSE(input_format_from_string("csv").has_value());
}

TEST(Ingest, OpenFile) {
  const std::string path = ::testing::TempDir() + "ingest_names.txt";
  {
    std::ofstream out(path);
    out << "x.example\ny.example\n";
  }
  auto reader = NameReader::open(path, InputFormat::kNames);
  EXPECT_EQ(reader->next(), "x.example");
  EXPECT_EQ(reader->next(), "y.example");
  EXPECT_EQ(reader->next(), std::nullopt);
  EXPECT_EQ(reader->line_number(), 2u);
  EXPECT_THROW(NameReader::open("/nonexistent/names.txt", InputFormat::kNames), IngestError);
}

}  // namespace
}  // namespace fpscan::pipeline
