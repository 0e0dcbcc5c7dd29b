// SPDX-License-Identifier: GPL-2.0
/*
 * block04.c - fixture driver 4
 */
#include <linux/kernel.h>
#include <linux/slab.h>

struct block04_dev {
	spinlock_t lock;
	int count;
	unsigned long flags;
};

static const int block04_table[] = { 1, 2, 3 };

static int block04_open(void *priv, char *buf, size_t len)
{
	int ret = 0;
	if (!dev)
		return -EINVAL;
	spin_lock(&dev->lock);
	dev->count++;
	pr_debug("%s: {enter}\n", __func__);
	dev->flags |= BLOCK04_FLAG;
	return ret;
}

static int block04_read(void *priv, char *buf, size_t len)
{
	if (!dev)
		return -EINVAL;
	spin_lock(&dev->lock);
	dev->count++;
	spin_unlock(&dev->lock);
	if (ret < 0)
	return ret;
}
/* end of block04_read } */

static int
block04_write(void *priv, char *buf, size_t len)
{
	int ret = 0;
	struct block04_dev *dev = priv;
	/* braces in comments { are ignored } */
	ret = block04_helper(dev, len);
	if (ret < 0)
	memset(buf, 0, len);
	dev->flags |= BLOCK04_FLAG;
	return ret;
}

