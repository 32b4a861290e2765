#pragma once

// File formats:
//   trace:       "# n=<count>" comment, "time,server" header, one row per
//                request including the dummy r0
//   predictions: "request_id,prediction" header, values within|beyond
//   log:         interval rows "kind,server,start,end" (kind regular|special|
//                infinite_tail, infinity rendered as "inf") and transfer rows
//                "transfer,src,dst,time,serves"
//   allocation:  "request,type,regular,special,transfer,extra,total"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "allocation.hpp"
#include "model.hpp"

namespace replisim {

/// Shortest round-trip decimal form of a double.
inline std::string format_double(double v) {
  if (v == kInf) return "inf";
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

inline double parse_double(const std::string& s, long line) {
  if (s == "inf") return kInf;
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ParseError("bad number '" + s + "'", line);
  return v;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(tok);
  return out;
}

inline void write_trace_csv(const RequestTrace& trace, std::ostream& out) {
  out << "# n=" << trace.n << "\n";
  out << "time,server\n";
  for (const Request& r : trace.requests)
    out << format_double(r.time) << ',' << r.server << "\n";
}

inline RequestTrace read_trace_csv(std::istream& in) {
  RequestTrace trace;
  std::string line;
  long line_no = 0;
  bool have_n = false, have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      size_t pos = line.find("n=");
      if (pos != std::string::npos) {
        trace.n = static_cast<int>(std::strtol(line.c_str() + pos + 2, nullptr, 10));
        have_n = true;
      }
      continue;
    }
    if (!have_header) {
      if (line != "time,server") throw ParseError("expected header 'time,server'", line_no);
      have_header = true;
      continue;
    }
    std::vector<std::string> f = split_csv(line);
    if (f.size() != 2) throw ParseError("expected 'time,server'", line_no);
    Request r;
    r.time = parse_double(f[0], line_no);
    r.server = static_cast<int>(std::strtol(f[1].c_str(), nullptr, 10));
    trace.requests.push_back(r);
  }
  if (!have_n) throw ParseError("missing '# n=<count>' comment", line_no);
  return validate_trace(std::move(trace));
}

inline void write_predictions_csv(const PredictionStream& predictions, std::ostream& out) {
  out << "request_id,prediction\n";
  for (size_t i = 0; i < predictions.size(); ++i)
    out << i << ',' << (predictions[i] == Prediction::WithinLambda ? "within" : "beyond") << "\n";
}

inline PredictionStream read_predictions_csv(std::istream& in) {
  PredictionStream out;
  std::string line;
  long line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!have_header) {
      if (line != "request_id,prediction")
        throw ParseError("expected header 'request_id,prediction'", line_no);
      have_header = true;
      continue;
    }
    std::vector<std::string> f = split_csv(line);
    if (f.size() != 2) throw ParseError("expected 'request_id,prediction'", line_no);
    long id = std::strtol(f[0].c_str(), nullptr, 10);
    if (id != static_cast<long>(out.size())) throw ParseError("request ids must be sequential", line_no);
    if (f[1] == "within")
      out.push_back(Prediction::WithinLambda);
    else if (f[1] == "beyond")
      out.push_back(Prediction::BeyondLambda);
    else
      throw ParseError("prediction must be 'within' or 'beyond'", line_no);
  }
  return out;
}

inline void write_log_csv(const ReplicationLog& log, std::ostream& out) {
  for (const CopyInterval& iv : log.intervals) {
    const char* kind = iv.kind == CopyKind::Regular
                           ? "regular"
                           : iv.kind == CopyKind::Special ? "special" : "infinite_tail";
    out << kind << ',' << iv.server << ',' << format_double(iv.start) << ','
        << format_double(iv.end) << "\n";
  }
  for (const Transfer& t : log.transfers)
    out << "transfer," << t.src << ',' << t.dst << ',' << format_double(t.time) << ','
        << t.serves << "\n";
}

inline void write_allocation_csv(const AllocationTable& table, std::ostream& out) {
  out << "request,type,regular,special,transfer,extra,total\n";
  out << "0,0,0,0,0,0,0\n";  // the dummy request carries no cost
  for (const AllocationEntry& e : table.entries)
    out << e.request << ',' << static_cast<int>(e.type) << ',' << format_double(e.regular_term)
        << ',' << format_double(e.special_term) << ',' << format_double(e.transfer_term) << ','
        << format_double(e.extra_leftover) << ',' << format_double(e.total) << "\n";
}

}  // namespace replisim
