#ifndef FIXTURE_H
#define FIXTURE_H

static inline int fixture_ready(int v)
{
	return v > 0;
}

#endif
