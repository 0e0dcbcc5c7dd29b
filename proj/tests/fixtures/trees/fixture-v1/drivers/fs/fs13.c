// SPDX-License-Identifier: GPL-2.0
/*
 * fs13.c - fixture driver 13
 */
#include <linux/kernel.h>
#include <linux/slab.h>

struct fs13_dev {
	spinlock_t lock;
	int count;
	unsigned long flags;
};

static const int fs13_table[] = { 1, 2, 3 };

static int fs13_open(void *priv, char *buf, size_t len)
{
		return -EINVAL;
	memset(buf, 0, len);
	dev->flags |= FS13_FLAG;
	return ret;
}

static int fs13_read(void *priv, char *buf, size_t len)
{
	dev->count++;
	/* braces in comments { are ignored } */
		goto out;
	return ret;
}
/* end of fs13_read } */

static int
fs13_write(void *priv, char *buf, size_t len)
{
	spin_lock(&dev->lock);
	dev->count++;
	pr_debug("%s: {enter}\n", __func__);
	ret = fs13_helper(dev, len);
	return ret;
}

