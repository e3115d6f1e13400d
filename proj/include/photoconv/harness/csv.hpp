// CSV output. Every file starts with a schema line; the column order is fixed.
#pragma once

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "photoconv/params.hpp"

namespace photoconv::harness {

inline constexpr const char* kCriticalSchema = "photoconv-critical-v1";
inline constexpr const char* kCriticalColumns =
    "S_c,V_c,tau_H,omega,A1,theta_i_deg,I_D,I_t,G_c,k_c,lambda_c,R_c,Im_gamma,branch,mode,sublayer_z,WUR,CDUR,mesh,"
    "status";

struct ResultRow {
  Params p;
  double k_c = NAN, lambda_c = NAN, R_c = NAN, Im_gamma = NAN;
  std::string branch;
  int mode = 0;
  double sublayer_z = NAN, WUR = NAN, CDUR = NAN;
  int mesh = 0;
  std::string status = "ok";
};

inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

// Commas and line breaks would break the row; anything else passes through.
inline std::string csv_field(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

inline void write_schema(std::ostream& out, const char* schema, const char* columns) {
  out << "# schema: " << schema << '\n' << columns << '\n';
}

inline void write_row(std::ostream& out, const ResultRow& r) {
  const Params& p = r.p;
  const double deg = p.theta0 * 180.0 / std::numbers::pi;
  out << fmt(p.S_c) << ',' << fmt(p.V_c) << ',' << fmt(p.tau_H) << ',' << fmt(p.omega) << ',' << fmt(p.A1) << ','
      << fmt(deg) << ',' << fmt(p.I_D) << ',' << fmt(p.I_t) << ',' << fmt(p.G_c) << ',' << fmt(r.k_c) << ','
      << fmt(r.lambda_c) << ',' << fmt(r.R_c) << ',' << fmt(r.Im_gamma) << ',' << csv_field(r.branch) << ','
      << r.mode << ',' << fmt(r.sublayer_z) << ',' << fmt(r.WUR) << ',' << fmt(r.CDUR) << ',' << r.mesh << ','
      << csv_field(r.status) << '\n';
}

}  // namespace photoconv::harness
