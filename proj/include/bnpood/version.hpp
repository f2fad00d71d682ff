#ifndef BNPOOD_VERSION_HPP
#define BNPOOD_VERSION_HPP

#define BNPOOD_VERSION "0.1.0"

#endif
